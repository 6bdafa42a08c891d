use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported regime: {what} requires n > 2p - 1 (n = {n}, p = {p})")]
    UnsupportedRegime { what: &'static str, n: u32, p: f64 },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {value:e}, error {error:e})")]
    NonConvergence {
        subdivisions: usize,
        value: f64,
        error: f64,
    },

    #[error("ill-conditioned request: {0}")]
    Conditioning(String),

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("pointwise {quantity} ratio is not constant: relative spread {spread:e} exceeds {tolerance:e}")]
    ConstancyViolation {
        quantity: &'static str,
        spread: f64,
        tolerance: f64,
    },

    #[error("point outside the boundary chart: {0}")]
    ChartDomain(String),

    #[error("degenerate fit: {0}")]
    FitDegeneracy(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
