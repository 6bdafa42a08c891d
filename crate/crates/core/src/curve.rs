//! The half-space curve `Phi_H`, the ball curve `Phi_B`, their multipliers and the
//! special constants `S`, `E`, `T_E`, `T_0` and `ISO(B)`.
//!
//! For `T < T_E` the minimizer is a Sobolev bubble centred at `t_T e_n`, for
//! `T = T_E` the Escobar profile, and for `T > T_E` a beyond-Escobar profile centred
//! at `s_T e_n`.  The trace/volume ratio of each family is monotone in the offset,
//! so the offset is found by bisection and the constant from the volume constraint.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::halfspace::{
    fullspace_moment, halfspace_moment, FullSpaceKind, MomentKind, BEYOND_ESCOBAR_MIN_GAP,
};
use crate::profile::{ProfileFamily, TranslatedProfile};
use crate::quadrature::{integrate, Estimate, QuadratureConfig};
use crate::sphere::unit_ball_volume;

/// Requests with `|T - T_E| <= ESCOBAR_BAND * T_E` return the Escobar profile.
pub const ESCOBAR_BAND: f64 = 1e-4;
/// Lower end of the half-space solver range, as a multiple of `T_E`.
pub const MIN_T_OVER_TE: f64 = 1e-3;
/// Upper end of the half-space solver range, as a multiple of `T_E`.
pub const MAX_T_OVER_TE: f64 = 50.0;
/// Relative spread allowed for the pointwise multiplier ratios.
pub const CONSTANCY_TOL: f64 = 1e-6;
/// Relative step of the central difference used for `Phi_H'`.
pub const DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sobolev,
    Escobar,
    Beyond,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Sobolev => "sobolev",
            Regime::Escobar => "escobar",
            Regime::Beyond => "beyond",
        }
    }
}

/// Consistency diagnostics attached to a solved point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// The trace level that was asked for; differs from `T` only inside the Escobar band.
    pub requested_t: f64,
    /// `int U^{p*} - 1`.
    pub volume: f64,
    /// `int_{dH} U^{p#} - T^{p#}`.
    pub trace: f64,
    /// `(Phi^p - lambda - sigma T^{p#}) / Phi^p`.
    pub identity: f64,
    /// Relative spread of the pointwise interior ratio.
    pub lambda_spread: f64,
    /// Relative spread of the pointwise boundary ratio.
    pub sigma_spread: f64,
    /// Largest relative quadrature error among the moments used.
    pub quadrature: f64,
    pub bisection_steps: u32,
}

/// One solved point of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPoint {
    /// Trace level `T`.
    #[serde(rename = "T")]
    pub t: f64,
    pub phi: f64,
    pub regime: Regime,
    /// Axis offset of the profile centre (`t_T`, `-1` or `s_T`); `0` on the ball.
    pub offset: f64,
    /// Normalization constant `c`.
    pub normalization: f64,
    /// Exact `-1 - offset` in the beyond regime, `0` otherwise.
    pub gap: f64,
    /// Dilation of the profile: `c * eta(|x - offset e_n| / scale)`.  `1` on `H`.
    pub scale: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub residuals: Residuals,
}

impl PhiPoint {
    pub fn profile(&self, exps: Exponents) -> Result<TranslatedProfile> {
        match self.regime {
            Regime::Sobolev => TranslatedProfile::sobolev(exps, self.offset, self.normalization),
            Regime::Escobar => TranslatedProfile::escobar(exps, self.normalization),
            Regime::Beyond => {
                TranslatedProfile::beyond_escobar_gap(exps, self.gap, self.normalization)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialConstants {
    /// Best constant of the Sobolev inequality `S ||u||_{p*} <= ||grad u||_p` on `R^n`.
    #[serde(rename = "S")]
    pub s: f64,
    /// Escobar constant `E = Phi_H(T_E)`.
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "T_E")]
    pub t_e: f64,
    #[serde(rename = "T_0")]
    pub t_0: f64,
    pub iso_b: f64,
    pub iso_b_root: f64,
}

/// `ISO(B) = n omega_n^{1/n}`.
pub fn iso_ball(n: u32) -> f64 {
    n as f64 * unit_ball_volume(n).powf(1.0 / n as f64)
}

fn unit_profile(family: ProfileFamily, offset: f64, exps: Exponents) -> Result<TranslatedProfile> {
    TranslatedProfile::new(exps, family, offset, 1.0)
}

/// `||U||_{L^{p#}(dH)} / ||U||_{L^{p*}(H)}`, independent of the normalization.
pub fn trace_volume_ratio(
    family: ProfileFamily,
    offset: f64,
    exps: Exponents,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    profile_ratio(&unit_profile(family, offset, exps)?, cfg)
}

/// Trace/volume ratio of a given profile.
pub fn profile_ratio(prof: &TranslatedProfile, cfg: &QuadratureConfig) -> Result<f64> {
    let e = &prof.exponents;
    let tr = halfspace_moment(prof, MomentKind::Trace, cfg)?;
    let vol = halfspace_moment(prof, MomentKind::Volume, cfg)?;
    Ok(tr.value.powf(1.0 / e.p_sharp) / vol.value.powf(1.0 / e.p_star))
}

/// Bisection for an increasing function `g` on `[lo, hi]` with `g(lo) < 0 < g(hi)`.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> Result<f64>) -> Result<(f64, u32)> {
    let mut steps = 0;
    while steps < 200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) || hi - lo <= 1e-15 * mid.abs().max(1.0) {
            return Ok((mid, steps));
        }
        steps += 1;
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), steps))
}

/// Solver for one `(n, p)`, holding the special constants it dispatches on.
#[derive(Debug, Clone)]
pub struct CurveSolver {
    pub exps: Exponents,
    pub cfg: QuadratureConfig,
    pub constants: SpecialConstants,
}

impl CurveSolver {
    pub fn new(exps: Exponents, cfg: QuadratureConfig) -> Result<Self> {
        let constants = special_constants(exps, &cfg)?;
        Ok(Self {
            exps,
            cfg,
            constants,
        })
    }

    /// Range of `T` accepted by [`CurveSolver::solve_h`].
    pub fn h_range(&self) -> (f64, f64) {
        (
            MIN_T_OVER_TE * self.constants.t_e,
            MAX_T_OVER_TE * self.constants.t_e,
        )
    }

    fn ratio(&self, family: ProfileFamily, offset: f64) -> Result<f64> {
        trace_volume_ratio(family, offset, self.exps, &self.cfg)
    }

    /// Offset `t_T` of the Sobolev minimizer with ratio `target`.
    fn sobolev_offset(&self, target: f64) -> Result<(f64, (f64, f64), u32)> {
        // the ratio decreases in the offset
        let g = |t: f64| Ok(target - self.ratio(ProfileFamily::Sobolev, t)?);
        let (mut lo, mut hi) = (-8.0, 8.0);
        while g(lo)? > 0.0 {
            lo *= 2.0;
            if lo < -1e9 {
                return Err(Error::BracketFailure(format!(
                    "no Sobolev offset below -1e9 reaches T = {target}"
                )));
            }
        }
        while g(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::BracketFailure(format!(
                    "no Sobolev offset above 1e9 reaches T = {target}"
                )));
            }
        }
        let (t, steps) = bisect(lo, hi, g)?;
        Ok((t, (lo, hi), steps))
    }

    /// Gap `-1 - s_T` of the beyond-Escobar minimizer, bisecting on its logarithm.
    fn beyond_offset(&self, target: f64) -> Result<(f64, (f64, f64), u32)> {
        // the ratio increases in s, so it decreases in the gap -1 - s
        let g = |u: f64| {
            let prof = TranslatedProfile::beyond_escobar_gap(self.exps, u.exp(), 1.0)?;
            Ok(target - profile_ratio(&prof, &self.cfg)?)
        };
        let (mut lo, mut hi) = (1e-3f64.ln(), 63f64.ln());
        while g(lo)? > 0.0 {
            lo -= std::f64::consts::LN_10;
            if lo < (4.0 * BEYOND_ESCOBAR_MIN_GAP).ln() {
                return Err(Error::BracketFailure(format!(
                    "T = {target} needs a beyond-Escobar offset closer than {:e} to -1",
                    4.0 * BEYOND_ESCOBAR_MIN_GAP
                )));
            }
        }
        while g(hi)? < 0.0 {
            hi += 2.0 * std::f64::consts::LN_2;
            if hi > 1e9f64.ln() {
                return Err(Error::BracketFailure(format!(
                    "no beyond-Escobar offset below -1e9 reaches T = {target}"
                )));
            }
        }
        let (u, steps) = bisect(lo, hi, g)?;
        Ok((u.exp(), (hi.exp(), lo.exp()), steps))
    }

    /// `Phi_H(T)` with the minimizer and pointwise multipliers.
    pub fn solve_h(&self, t: f64) -> Result<PhiPoint> {
        let te = self.constants.t_e;
        let (tmin, tmax) = self.h_range();
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "trace level T = {t} must be positive"
            )));
        }
        if t < tmin || t > tmax {
            return Err(Error::OutOfRange(format!(
                "T = {t} outside the solver range [{tmin}, {tmax}]"
            )));
        }
        let e = &self.exps;
        let (unit, steps, level) = if (t - te).abs() <= ESCOBAR_BAND * te {
            (TranslatedProfile::escobar(*e, 1.0)?, 0, te)
        } else if t < te {
            let (off, _, steps) = self.sobolev_offset(t)?;
            (TranslatedProfile::sobolev(*e, off, 1.0)?, steps, t)
        } else {
            let (gap, _, steps) = self.beyond_offset(t)?;
            (
                TranslatedProfile::beyond_escobar_gap(*e, gap, 1.0)?,
                steps,
                t,
            )
        };
        let (family, offset) = (unit.family, unit.offset);
        let vol = halfspace_moment(&unit, MomentKind::Volume, &self.cfg)?;
        let c = vol.value.powf(-1.0 / e.p_star);
        let prof = unit.with_normalization(c)?;
        let vol = halfspace_moment(&prof, MomentKind::Volume, &self.cfg)?;
        let tr = halfspace_moment(&prof, MomentKind::Trace, &self.cfg)?;
        let en = halfspace_moment(&prof, MomentKind::Energy, &self.cfg)?;
        let phi = en.value.powf(1.0 / e.p);
        let regime = match family {
            ProfileFamily::Sobolev => Regime::Sobolev,
            ProfileFamily::Escobar => Regime::Escobar,
            ProfileFamily::BeyondEscobar => Regime::Beyond,
        };
        let pw = pointwise_multipliers(&prof, phi, level)?;
        let tp = level.powf(e.p_sharp);
        let phip = en.value;
        Ok(PhiPoint {
            t: level,
            phi,
            regime,
            offset,
            normalization: c,
            gap: prof.gap,
            scale: 1.0,
            lambda: pw.lambda,
            sigma: pw.sigma,
            residuals: Residuals {
                requested_t: t,
                volume: vol.value - 1.0,
                trace: tr.value - tp,
                identity: (phip - pw.lambda - pw.sigma * tp) / phip,
                lambda_spread: pw.lambda_spread,
                sigma_spread: pw.sigma_spread,
                quadrature: [vol, tr, en]
                    .iter()
                    .map(Estimate::relative_error)
                    .fold(0.0, f64::max),
                bisection_steps: steps,
            },
        })
    }

    /// Solves a list of trace levels concurrently; results keep the input order.
    pub fn solve_h_many(&self, levels: &[f64]) -> Vec<Result<PhiPoint>> {
        levels.par_iter().map(|&t| self.solve_h(t)).collect()
    }

    /// `Phi_H'(T)` by central differences with step `DERIVATIVE_STEP * T`, using the
    /// actual trace levels of the solved neighbours as abscissae.
    pub fn phi_h_derivative(&self, point: &PhiPoint) -> Result<f64> {
        let (tmin, tmax) = self.h_range();
        let h = DERIVATIVE_STEP * point.t;
        let left = (point.t - h).max(tmin);
        let right = (point.t + h).min(tmax);
        let mut nodes = vec![(point.t, point.phi)];
        if left < point.t {
            let q = self.solve_h(left)?;
            nodes.push((q.t, q.phi));
        }
        if right > point.t {
            let q = self.solve_h(right)?;
            nodes.push((q.t, q.phi));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|a, b| a.0 == b.0);
        match nodes.len() {
            3 => {
                // derivative at the middle node of the quadratic interpolant
                let (x0, y0) = nodes[0];
                let (x1, y1) = nodes[1];
                let (x2, y2) = nodes[2];
                let pivot = point.t;
                let d0 = (2.0 * pivot - x1 - x2) / ((x0 - x1) * (x0 - x2));
                let d1 = (2.0 * pivot - x0 - x2) / ((x1 - x0) * (x1 - x2));
                let d2 = (2.0 * pivot - x0 - x1) / ((x2 - x0) * (x2 - x1));
                Ok(y0 * d0 + y1 * d1 + y2 * d2)
            }
            2 => Ok((nodes[1].1 - nodes[0].1) / (nodes[1].0 - nodes[0].0)),
            _ => Err(Error::Conditioning(format!(
                "no distinct neighbours to differentiate at T = {}",
                point.t
            ))),
        }
    }

    /// Both multiplier routes at a solved half-space point.
    pub fn multipliers(&self, point: &PhiPoint) -> Result<Multipliers> {
        let prof = point.profile(self.exps)?;
        let pw = pointwise_multipliers(&prof, point.phi, point.t)?;
        let e = &self.exps;
        let dphi = self.phi_h_derivative(point)?;
        let sigma_derivative = point.phi.powf(e.p - 1.0) * dphi / point.t.powf(e.p_sharp - 1.0);
        let sigma_scale = point.phi.powf(e.p) / point.t.powf(e.p_sharp);
        Ok(Multipliers {
            lambda: pw.lambda,
            sigma: pw.sigma,
            lambda_spread: pw.lambda_spread,
            sigma_spread: pw.sigma_spread,
            phi_derivative: dphi,
            sigma_derivative,
            sigma_agreement: (pw.sigma - sigma_derivative).abs() / sigma_scale,
        })
    }

    /// `Phi_B(T)` on the unit ball, from the dilated Sobolev bubble `eta(|x| / alpha)`.
    pub fn solve_b(&self, t: f64) -> Result<PhiPoint> {
        solve_phi_b_inner(t, self.exps, &self.cfg, self.constants.iso_b_root)
    }
}

/// Multipliers from the pointwise route and the derivative cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: f64,
    pub sigma: f64,
    pub lambda_spread: f64,
    pub sigma_spread: f64,
    pub phi_derivative: f64,
    /// `Phi^{p-1} Phi' / T^{p# - 1}`.
    pub sigma_derivative: f64,
    /// `|sigma - sigma_derivative|` relative to `Phi^p / T^{p#}`.
    pub sigma_agreement: f64,
}

struct Pointwise {
    lambda: f64,
    sigma: f64,
    lambda_spread: f64,
    sigma_spread: f64,
}

fn spread(xs: &[f64], scale: f64) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / scale
}

/// `lambda = -Delta_p U / U^{p*-1}` at interior points and
/// `sigma = |grad U|^{p-2} (-partial_n U) / U^{p#-1}` at boundary points.
fn pointwise_multipliers(prof: &TranslatedProfile, phi: f64, level: f64) -> Result<Pointwise> {
    let e = &prof.exponents;
    let c = prof.normalization;
    let t = prof.offset;
    let phip = phi.powf(e.p);
    let width = 1.0 + t.abs();

    let below = (-t).max(prof.domain_start());
    let lambdas: Vec<f64> = [0.05, 0.3, 1.0, 2.5, 7.0]
        .iter()
        .map(|&k| {
            let r = below + k * width;
            let u = c * prof.shape(r);
            Ok(-prof.p_laplacian(r)? / u.powf(e.p_star - 1.0))
        })
        .collect::<Result<_>>()?;

    let sigmas: Vec<f64> = [0.0, 0.2, 1.0, 3.0, 9.0]
        .iter()
        .map(|&k| {
            let (r, x) = prof.boundary_radius(k * width);
            let u = c * prof.shape_excess(r, x);
            let g = c * prof.shape_slope_excess(r, x);
            g.abs().powf(e.p - 2.0) * g * t / r / u.powf(e.p_sharp - 1.0)
        })
        .collect();

    let sigma_scale = phip / level.powf(e.p_sharp);
    let lambda_spread = spread(&lambdas, phip);
    let sigma_spread = spread(&sigmas, sigma_scale);
    if lambda_spread > CONSTANCY_TOL {
        return Err(Error::ConstancyViolation {
            quantity: "interior multiplier",
            spread: lambda_spread,
            tolerance: CONSTANCY_TOL,
        });
    }
    if sigma_spread > CONSTANCY_TOL {
        return Err(Error::ConstancyViolation {
            quantity: "boundary multiplier",
            spread: sigma_spread,
            tolerance: CONSTANCY_TOL,
        });
    }
    Ok(Pointwise {
        lambda: lambdas.iter().sum::<f64>() / lambdas.len() as f64,
        sigma: sigmas.iter().sum::<f64>() / sigmas.len() as f64,
        lambda_spread,
        sigma_spread,
    })
}

pub fn special_constants(exps: Exponents, cfg: &QuadratureConfig) -> Result<SpecialConstants> {
    let bubble = unit_profile(ProfileFamily::Sobolev, 0.0, exps)?;
    let vol = fullspace_moment(&bubble, FullSpaceKind::Pstar, cfg)?;
    let en = fullspace_moment(&bubble, FullSpaceKind::Energy, cfg)?;
    let s = en.value.powf(1.0 / exps.p) / vol.value.powf(1.0 / exps.p_star);

    let esc = unit_profile(ProfileFamily::Escobar, -1.0, exps)?;
    let ev = halfspace_moment(&esc, MomentKind::Volume, cfg)?;
    let ee = halfspace_moment(&esc, MomentKind::Energy, cfg)?;
    let e = ee.value.powf(1.0 / exps.p) / ev.value.powf(1.0 / exps.p_star);

    let t_e = trace_volume_ratio(ProfileFamily::Escobar, -1.0, exps, cfg)?;
    let t_0 = trace_volume_ratio(ProfileFamily::Sobolev, 0.0, exps, cfg)?;
    let iso_b = iso_ball(exps.n);
    Ok(SpecialConstants {
        s,
        e,
        t_e,
        t_0,
        iso_b,
        iso_b_root: iso_b.powf(1.0 / exps.p_sharp),
    })
}

pub fn solve_phi_h(t: f64, exps: Exponents, cfg: &QuadratureConfig) -> Result<PhiPoint> {
    CurveSolver::new(exps, *cfg)?.solve_h(t)
}

pub fn solve_phi_b(t: f64, exps: Exponents, cfg: &QuadratureConfig) -> Result<PhiPoint> {
    let root = iso_ball(exps.n).powf(1.0 / exps.p_sharp);
    solve_phi_b_inner(t, exps, cfg, root)
}

/// Volume, trace and energy of `eta(|x| / alpha)` on the unit ball.
pub fn ball_moments(
    alpha: f64,
    exps: Exponents,
    cfg: &QuadratureConfig,
) -> Result<(Estimate, f64, Estimate)> {
    let prof = unit_profile(ProfileFamily::Sobolev, 0.0, exps)?;
    let area = exps.dim() * unit_ball_volume(exps.n);
    let n1 = (exps.n - 1) as i32;
    // the bubble varies on the scale alpha
    let mut pts = vec![0.0, 1.0];
    let mut x = alpha / 16.0;
    while x < 1.0 {
        pts.push(x);
        x *= 2.0;
    }
    pts.sort_by(f64::total_cmp);
    let vol = integrate(
        |r| area * r.powi(n1) * prof.shape(r / alpha).powf(exps.p_star),
        &pts,
        cfg.rel_tol,
        0.0,
        cfg.max_subdivisions,
    )?;
    let en = integrate(
        |r| area * r.powi(n1) * (prof.shape_slope(r / alpha) / alpha).abs().powf(exps.p),
        &pts,
        cfg.rel_tol,
        0.0,
        cfg.max_subdivisions,
    )?;
    let tr = area * prof.shape(1.0 / alpha).powf(exps.p_sharp);
    Ok((vol, tr, en))
}

/// Trace/volume ratio of `eta(|x| / alpha)` on the unit ball.
pub fn ball_ratio(alpha: f64, exps: Exponents, cfg: &QuadratureConfig) -> Result<f64> {
    let (vol, tr, _) = ball_moments(alpha, exps, cfg)?;
    Ok(tr.powf(1.0 / exps.p_sharp) / vol.value.powf(1.0 / exps.p_star))
}

fn solve_phi_b_inner(
    t: f64,
    exps: Exponents,
    cfg: &QuadratureConfig,
    root: f64,
) -> Result<PhiPoint> {
    cfg.validate()?;
    if !(t > 0.0 && t < root) {
        return Err(Error::OutOfRange(format!(
            "ball trace level T = {t} outside (0, {root})"
        )));
    }
    // the ratio increases with alpha
    let g = |la: f64| Ok(ball_ratio(la.exp(), exps, cfg)? - t);
    let (mut lo, mut hi) = (
        -3.0 * std::f64::consts::LN_10,
        3.0 * std::f64::consts::LN_10,
    );
    while g(lo)? > 0.0 {
        lo -= 2.0 * std::f64::consts::LN_2;
        if lo < -60.0 {
            return Err(Error::BracketFailure(format!(
                "no dilation below e^-60 reaches T = {t}"
            )));
        }
    }
    while g(hi)? < 0.0 {
        hi += 2.0 * std::f64::consts::LN_2;
        if hi > 60.0 {
            return Err(Error::BracketFailure(format!(
                "no dilation above e^60 reaches T = {t}"
            )));
        }
    }
    let (la, steps) = bisect(lo, hi, g)?;
    let alpha = la.exp();
    let (vol, tr, en) = ball_moments(alpha, exps, cfg)?;
    let c = vol.value.powf(-1.0 / exps.p_star);
    let phip = en.value * c.powf(exps.p);
    let phi = phip.powf(1.0 / exps.p);
    let tp = tr * c.powf(exps.p_sharp);

    // pointwise multipliers of c eta(r / alpha) on the ball
    let prof = TranslatedProfile::sobolev(exps, 0.0, 1.0)?;
    let lambdas: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&r| {
            let lap = c.powf(exps.p - 1.0) * alpha.powf(-exps.p) * prof.p_laplacian(r / alpha)?;
            Ok(-lap / (c * prof.shape(r / alpha)).powf(exps.p_star - 1.0))
        })
        .collect::<Result<_>>()?;
    let g1 = c * prof.shape_slope(1.0 / alpha) / alpha;
    let u1 = c * prof.shape(1.0 / alpha);
    // outward normal derivative on the unit sphere
    let sigma = g1.abs().powf(exps.p - 2.0) * g1 / u1.powf(exps.p_sharp - 1.0);
    let lambda = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    let lambda_spread = spread(&lambdas, phip);
    if lambda_spread > CONSTANCY_TOL {
        return Err(Error::ConstancyViolation {
            quantity: "interior multiplier",
            spread: lambda_spread,
            tolerance: CONSTANCY_TOL,
        });
    }
    Ok(PhiPoint {
        t,
        phi,
        regime: Regime::Sobolev,
        offset: 0.0,
        normalization: c,
        gap: 0.0,
        scale: alpha,
        lambda,
        sigma,
        residuals: Residuals {
            requested_t: t,
            volume: vol.value * c.powf(exps.p_star) - 1.0,
            trace: tp - t.powf(exps.p_sharp),
            identity: (phip - lambda - sigma * tp) / phip,
            lambda_spread,
            sigma_spread: 0.0,
            quadrature: vol.relative_error().max(en.relative_error()),
            bisection_steps: steps,
        },
    })
}
