//! Critical exponents attached to a dimension `n` and an integrability exponent `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The pair `(n, p)` together with its derived critical exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub n: u32,
    pub p: f64,
    /// Volume exponent `np / (n - p)`.
    pub p_star: f64,
    /// Trace exponent `(n - 1) p / (n - p)`.
    pub p_sharp: f64,
    /// Conjugate exponent `p / (p - 1)`.
    pub p_prime: f64,
}

impl Exponents {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        derived_exponents(n, p)
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// Decay rate `(n - p)/(p - 1)` of every half-space extremal at infinity.
    pub fn decay_rate(&self) -> f64 {
        (self.dim() - self.p) / (self.p - 1.0)
    }

    /// Decay rate `(n - 1)/(p - 1)` of the gradient of every extremal.
    pub fn gradient_decay_rate(&self) -> f64 {
        (self.dim() - 1.0) / (self.p - 1.0)
    }

    /// `n > 2p - 1`: first moments of the energy density are finite.
    pub fn has_finite_first_moments(&self) -> bool {
        self.dim() > 2.0 * self.p - 1.0
    }

    /// `n > 2p`: the boundary-concentration expansion is available.
    pub fn admits_expansion(&self) -> bool {
        self.dim() > 2.0 * self.p
    }
}

pub fn derived_exponents(n: u32, p: f64) -> Result<Exponents> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "dimension n = {n} must be at least 2"
        )));
    }
    let nf = n as f64;
    if !(p.is_finite() && p > 1.0 && p < nf) {
        return Err(Error::Domain(format!(
            "p = {p} must lie in (1, n) = (1, {n})"
        )));
    }
    let p_star = nf * p / (nf - p);
    Ok(Exponents {
        n,
        p,
        p_star,
        p_sharp: (nf - 1.0) * p / (nf - p),
        p_prime: p / (p - 1.0),
    })
}
