//! Explicit radial extremal profiles of the half-space problem.
//!
//! Three shapes appear, all radial about a point `offset * e_n` of the axis:
//!
//! * Sobolev bubble `(1 + r^{p'})^{1 - n/p}`, finite for every `r >= 0`;
//! * Escobar profile `r^{-(n-p)/(p-1)}`, a multiple of the p-Laplacian
//!   fundamental solution, centred one unit below the boundary;
//! * beyond-Escobar profile `(r^{p'} - 1)^{1 - n/p}`, singular on the unit sphere
//!   around a centre lying strictly below `-e_n`.
//!
//! All three decay like `|x|^{-(n-p)/(p-1)}` with gradients decaying like
//! `|x|^{-(n-1)/(p-1)}`; [`decay_envelope`] turns that into explicit tail bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::sphere::{unit_ball_volume, unit_sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    Sobolev,
    Escobar,
    BeyondEscobar,
}

/// `c * eta(|x - offset * e_n|)` for one of the three profile shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslatedProfile {
    pub exponents: Exponents,
    pub family: ProfileFamily,
    pub offset: f64,
    pub normalization: f64,
    /// `-1 - offset` for beyond-Escobar profiles, carried separately so that gaps far
    /// below the spacing of doubles near `1` stay exact; `0` for the other families.
    pub gap: f64,
}

impl TranslatedProfile {
    pub fn new(
        exponents: Exponents,
        family: ProfileFamily,
        offset: f64,
        normalization: f64,
    ) -> Result<Self> {
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(Error::Domain(format!(
                "normalization {normalization} must be positive"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::Domain("offset must be finite".into()));
        }
        match family {
            ProfileFamily::Sobolev => {}
            ProfileFamily::Escobar => {
                if offset != -1.0 {
                    return Err(Error::Domain(format!(
                        "Escobar profiles are centred at -e_n, got offset {offset}"
                    )));
                }
            }
            ProfileFamily::BeyondEscobar => {
                if offset >= -1.0 {
                    return Err(Error::Domain(format!(
                        "beyond-Escobar offset {offset} must be < -1"
                    )));
                }
            }
        }
        let gap = match family {
            ProfileFamily::BeyondEscobar => -1.0 - offset,
            _ => 0.0,
        };
        Ok(Self {
            exponents,
            family,
            offset,
            normalization,
            gap,
        })
    }

    pub fn sobolev(exponents: Exponents, offset: f64, normalization: f64) -> Result<Self> {
        Self::new(exponents, ProfileFamily::Sobolev, offset, normalization)
    }

    pub fn escobar(exponents: Exponents, normalization: f64) -> Result<Self> {
        Self::new(exponents, ProfileFamily::Escobar, -1.0, normalization)
    }

    pub fn beyond_escobar(exponents: Exponents, offset: f64, normalization: f64) -> Result<Self> {
        Self::new(
            exponents,
            ProfileFamily::BeyondEscobar,
            offset,
            normalization,
        )
    }

    /// Beyond-Escobar profile centred at `-(1 + gap) e_n`, with `gap` kept exact.
    pub fn beyond_escobar_gap(exponents: Exponents, gap: f64, normalization: f64) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::Domain(format!(
                "beyond-Escobar gap {gap} must be positive"
            )));
        }
        // -1 - gap may round to -1; the gap is what defines the profile
        let base = Self::new(exponents, ProfileFamily::Sobolev, -1.0 - gap, normalization)?;
        Ok(Self {
            family: ProfileFamily::BeyondEscobar,
            gap,
            ..base
        })
    }

    /// Same shape and centre, different multiplicative constant.
    pub fn with_normalization(&self, normalization: f64) -> Result<Self> {
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(Error::Domain(format!(
                "normalization {normalization} must be positive"
            )));
        }
        Ok(Self {
            normalization,
            ..*self
        })
    }

    /// `(r, r - 1)` at the boundary point at distance `rho` from the foot of the axis.
    /// For beyond-Escobar profiles `r - 1` is formed from the exact gap.
    pub(crate) fn boundary_radius(&self, rho: f64) -> (f64, f64) {
        let r = rho.hypot(self.offset);
        let x = if self.family == ProfileFamily::BeyondEscobar {
            (rho * rho + self.gap * (2.0 + self.gap)) / (r + 1.0)
        } else {
            r - 1.0
        };
        (r, x)
    }

    /// `eta` at radius `r`, with `x = r - 1` supplied exactly.
    pub(crate) fn shape_excess(&self, r: f64, x: f64) -> f64 {
        match self.family {
            ProfileFamily::BeyondEscobar => {
                let e = &self.exponents;
                let m = 1.0 - e.dim() / e.p;
                (m * beyond_gap_excess(e.p_prime, x).ln()).exp()
            }
            _ => self.shape(r),
        }
    }

    /// `eta'` at radius `r`, with `x = r - 1` supplied exactly.
    pub(crate) fn shape_slope_excess(&self, r: f64, x: f64) -> f64 {
        match self.family {
            ProfileFamily::BeyondEscobar => {
                let e = &self.exponents;
                let q = e.p_prime;
                let m = 1.0 - e.dim() / e.p;
                m * q * r.powf(q - 1.0) * (beyond_gap_excess(q, x).ln() * (m - 1.0)).exp()
            }
            _ => self.shape_slope(r),
        }
    }

    /// Lower end of the radial domain (exclusive for Escobar and beyond-Escobar).
    pub fn domain_start(&self) -> f64 {
        match self.family {
            ProfileFamily::Sobolev => 0.0,
            ProfileFamily::Escobar => 0.0,
            ProfileFamily::BeyondEscobar => 1.0,
        }
    }

    pub fn in_domain(&self, r: f64) -> bool {
        match self.family {
            ProfileFamily::Sobolev => r >= 0.0 && r.is_finite(),
            ProfileFamily::Escobar => r > 0.0 && r.is_finite(),
            ProfileFamily::BeyondEscobar => r > 1.0 && r.is_finite(),
        }
    }

    fn check(&self, r: f64) -> Result<()> {
        if self.in_domain(r) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "radius {r} outside the domain of the {:?} profile",
                self.family
            )))
        }
    }

    /// Unnormalized shape `eta(r)`; callers guarantee `r` is in the domain.
    pub(crate) fn shape(&self, r: f64) -> f64 {
        let e = &self.exponents;
        let m = 1.0 - e.dim() / e.p;
        match self.family {
            ProfileFamily::Sobolev => (m * r.powf(e.p_prime).ln_1p()).exp(),
            ProfileFamily::Escobar => r.powf(-e.decay_rate()),
            ProfileFamily::BeyondEscobar => (m * beyond_gap(e.p_prime, r).ln()).exp(),
        }
    }

    /// Unnormalized radial derivative `eta'(r)`.
    pub(crate) fn shape_slope(&self, r: f64) -> f64 {
        let e = &self.exponents;
        let q = e.p_prime;
        let m = 1.0 - e.dim() / e.p;
        match self.family {
            ProfileFamily::Sobolev => {
                if r == 0.0 {
                    return 0.0;
                }
                let rq = r.powf(q);
                m * q * rq / r * (rq.ln_1p() * (m - 1.0)).exp()
            }
            ProfileFamily::Escobar => {
                let a = e.decay_rate();
                -a * r.powf(-a - 1.0)
            }
            ProfileFamily::BeyondEscobar => {
                let gap = beyond_gap(q, r);
                m * q * r.powf(q - 1.0) * (gap.ln() * (m - 1.0)).exp()
            }
        }
    }

    /// `d/dr log|eta'(r)|`, the only extra ingredient of the radial p-Laplacian.
    pub(crate) fn slope_log_derivative(&self, r: f64) -> f64 {
        let e = &self.exponents;
        let q = e.p_prime;
        let m = 1.0 - e.dim() / e.p;
        match self.family {
            ProfileFamily::Sobolev => {
                let rq = r.powf(q);
                (q - 1.0) / r + (m - 1.0) * q * rq / (r * (1.0 + rq))
            }
            ProfileFamily::Escobar => -(e.decay_rate() + 1.0) / r,
            ProfileFamily::BeyondEscobar => {
                let rq = r.powf(q);
                (q - 1.0) / r + (m - 1.0) * q * rq / (r * beyond_gap(q, r))
            }
        }
    }

    /// Radial p-Laplacian `Delta_p (c eta)(r)`
    /// `= c^{p-1} [ (|eta'|^{p-2} eta')' + (n - 1) |eta'|^{p-2} eta' / r ]`.
    pub fn p_laplacian(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        if r == 0.0 {
            return Err(Error::Domain("p-Laplacian evaluated at the centre".into()));
        }
        let e = &self.exponents;
        let g = self.shape_slope(r).abs();
        let flux = g.powf(e.p - 1.0);
        let inner = -flux * ((e.p - 1.0) * self.slope_log_derivative(r) + (e.dim() - 1.0) / r);
        Ok(self.normalization.powf(e.p - 1.0) * inner)
    }
}

/// `r^q - 1`, evaluated without cancellation as `r -> 1+`.
fn beyond_gap(q: f64, r: f64) -> f64 {
    beyond_gap_excess(q, r - 1.0)
}

/// `(1 + x)^q - 1`.
fn beyond_gap_excess(q: f64, x: f64) -> f64 {
    (q * x.ln_1p()).exp_m1()
}

/// `c * eta(r)`.
pub fn profile_value(prof: &TranslatedProfile, r: f64) -> Result<f64> {
    prof.check(r)?;
    Ok(prof.normalization * prof.shape(r))
}

/// `c * eta'(r)`.
pub fn profile_slope(prof: &TranslatedProfile, r: f64) -> Result<f64> {
    prof.check(r)?;
    Ok(prof.normalization * prof.shape_slope(r))
}

/// Tail quantities controlled by [`decay_envelope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailQuantity {
    /// `int_{H \ B_R} U^{p*}`
    PstarMass,
    /// `int_{H \ B_R} |x| U^{p*}`
    PstarFirstMoment,
    /// `int_{H \ B_R} |grad U|^p`
    GradPMass,
    /// `int_{H \ B_R} |x| |grad U|^p`, finite only when `n > 2p - 1`
    GradPFirstMoment,
    /// `int_{dH \ B_R} U^{p#}`
    TracePsharpMass,
    /// `int_{H \ B_R} U |grad U|^{p-1}`, finite only when `n > 2p - 1`
    ValueGradMass,
}

/// Radius beyond which the pointwise power-law envelopes are applied.
pub fn envelope_radius(prof: &TranslatedProfile) -> f64 {
    10.0 * (1.0 + prof.offset.abs())
}

/// Constants `(C_u, C_g)` with `U(x) <= C_u |x|^{-a}` and `|grad U(x)| <= C_g |x|^{-b}`
/// for `|x| >= envelope_radius`, where `a = (n-p)/(p-1)`, `b = (n-1)/(p-1)`.
///
/// On that range the distance `r` to the centre satisfies `r >= 0.9 |x|`, and
/// `eta(r) r^a`, `|eta'(r)| r^b` are monotone, so their suprema over `r >= 0.9 R_0`
/// are attained either at `0.9 R_0` or at infinity.
pub fn pointwise_envelope_constants(prof: &TranslatedProfile) -> (f64, f64) {
    let e = &prof.exponents;
    let a = e.decay_rate();
    let b = e.gradient_decay_rate();
    let s0 = 0.9 * envelope_radius(prof);
    let (ku, kg) = match prof.family {
        ProfileFamily::Sobolev | ProfileFamily::Escobar => (1.0, a),
        ProfileFamily::BeyondEscobar => (
            (prof.shape(s0) * s0.powf(a)).max(1.0),
            (prof.shape_slope(s0).abs() * s0.powf(b)).max(a),
        ),
    };
    let stretch = (1.0f64 / 0.9).powf(a);
    let stretch_g = (1.0f64 / 0.9).powf(b);
    (
        prof.normalization * ku * stretch,
        prof.normalization * kg * stretch_g,
    )
}

/// Rigorous upper bound for the tail integral of `quantity` beyond radius `radius`
/// (measured from the origin), obtained by integrating the pointwise power-law
/// envelopes analytically.
pub fn decay_envelope(
    prof: &TranslatedProfile,
    quantity: TailQuantity,
    radius: f64,
) -> Result<f64> {
    let r0 = envelope_radius(prof);
    if !(radius >= r0) {
        return Err(Error::Domain(format!(
            "tail radius {radius} below the envelope radius {r0}"
        )));
    }
    let e = &prof.exponents;
    let n = e.dim();
    let p = e.p;
    let (cu, cg) = pointwise_envelope_constants(prof);
    let half_sphere = 0.5 * n * unit_ball_volume(e.n);
    let boundary_sphere = unit_sphere_area(e.n - 2);
    let power_tail = |coef: f64, rate: f64| coef * radius.powf(-rate) / rate;
    let need_moments = |what| {
        if e.has_finite_first_moments() {
            Ok(())
        } else {
            Err(Error::UnsupportedRegime { what, n: e.n, p })
        }
    };
    Ok(match quantity {
        TailQuantity::PstarMass => power_tail(cu.powf(e.p_star) * half_sphere, n / (p - 1.0)),
        TailQuantity::PstarFirstMoment => {
            power_tail(cu.powf(e.p_star) * half_sphere, (n + 1.0 - p) / (p - 1.0))
        }
        TailQuantity::GradPMass => power_tail(cg.powf(p) * half_sphere, (n - p) / (p - 1.0)),
        TailQuantity::GradPFirstMoment => {
            need_moments("first moment of |grad U|^p")?;
            power_tail(cg.powf(p) * half_sphere, (n + 1.0 - 2.0 * p) / (p - 1.0))
        }
        TailQuantity::TracePsharpMass => {
            power_tail(cu.powf(e.p_sharp) * boundary_sphere, (n - 1.0) / (p - 1.0))
        }
        TailQuantity::ValueGradMass => {
            need_moments("mass of U |grad U|^{p-1}")?;
            power_tail(
                cu * cg.powf(p - 1.0) * half_sphere,
                (n + 1.0 - 2.0 * p) / (p - 1.0),
            )
        }
    })
}

/// Exponent `gamma` in `decay_envelope(R) = A R^{-gamma}`.
pub(crate) fn tail_rate(e: &Exponents, quantity: TailQuantity) -> f64 {
    let n = e.dim();
    let p = e.p;
    match quantity {
        TailQuantity::PstarMass => n / (p - 1.0),
        TailQuantity::PstarFirstMoment => (n + 1.0 - p) / (p - 1.0),
        TailQuantity::GradPMass => (n - p) / (p - 1.0),
        TailQuantity::GradPFirstMoment | TailQuantity::ValueGradMass => {
            (n + 1.0 - 2.0 * p) / (p - 1.0)
        }
        TailQuantity::TracePsharpMass => (n - 1.0) / (p - 1.0),
    }
}
