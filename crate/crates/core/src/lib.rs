//! Half-space and ball best-Sobolev curves.
//!
//! The half-space curve `Phi_H(T)` is the least `L^p` gradient norm among functions
//! on `H = {x_n > 0}` with unit `L^{p*}` volume norm and `L^{p#}` trace norm `T`; its
//! minimizers are translated Sobolev bubbles, the Escobar profile, or the
//! beyond-Escobar family.  This crate evaluates those minimizers, the curve, its
//! multipliers, and a set of numerical checks on the inequalities the curve satisfies.

pub mod ansatz;
pub mod curve;
pub mod error;
pub mod exponents;
pub mod halfspace;
pub mod profile;
pub mod quadrature;
pub mod sphere;
pub mod verify;

pub use ansatz::{
    assemble_and_measure, ball_chart_factors, epsilon_slope_check, ExpansionConfig, ExpansionRun,
};
pub use curve::{
    solve_phi_b, solve_phi_h, special_constants, trace_volume_ratio, CurveSolver, Multipliers,
    PhiPoint, Regime, SpecialConstants,
};
pub use error::{Error, Result};
pub use exponents::{derived_exponents, Exponents};
pub use halfspace::{
    fullspace_moment, halfspace_moment, halfspace_moments, lambda_functional, FullSpaceKind,
    HalfSpaceMoments, MomentKind,
};
pub use profile::{
    decay_envelope, profile_slope, profile_value, ProfileFamily, TailQuantity, TranslatedProfile,
};
pub use quadrature::{Estimate, QuadratureConfig, TruncationPolicy};
pub use sphere::{cap_polar_limit, sin_power_integral};
pub use verify::{
    comparison_report, interpolation_spot_checks, key_inequality_margin, key_report, ClaimRecord,
    KeyMargin, VerificationReport,
};
