//! Boundary-concentration ansatz on the unit ball: a rescaled half-space minimizer
//! glued into the ball through the normal-coordinate chart, and the first-order
//! behaviour of its energy, volume and trace as the scale `eps -> 0`.
//!
//! The ball is `B(e_n, 1)`, tangent to `{x_n = 0}` at the origin.  The chart sends
//! `(x', x_n)` to the point at distance `x_n` from the boundary along the inner normal
//! through the boundary point above `x'`.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::CurveSolver;
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::halfspace::{halfspace_moment, lambda_functional, MomentKind};
use crate::profile::TranslatedProfile;
use crate::quadrature::{integrate, Estimate, QuadratureConfig};
use crate::sphere::unit_sphere_area;

/// Radius of the chart `|x| < R` on which the sphere factors are evaluated.
pub const CHART_RADIUS: f64 = 0.5;
/// Slope agreement with the first-order targets.
pub const SLOPE_TOL: f64 = 0.1;
/// Largest growth of the fitted gluing constant under refinement.
pub const GLUING_STABILITY: f64 = 2.0;

/// Largest outer cut-off radius for which the glued function stays inside the chart,
/// from `|f(x)|^2 >= |x|^2 (1 - x_n)`.
pub fn max_cutoff_radius() -> f64 {
    CHART_RADIUS * (1.0 - CHART_RADIUS).sqrt()
}

/// Open window of admissible gluing exponents `beta`.
pub fn beta_window(exps: Exponents) -> (f64, f64) {
    let (n, p) = (exps.dim(), exps.p);
    (1.0 / (n - p), 1f64.min((n + 1.0 - 2.0 * p) / (n - p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub exps: Exponents,
    #[serde(rename = "T")]
    pub t: f64,
    pub beta: f64,
    pub epsilon_list: Vec<f64>,
    /// Mean-curvature sum of the boundary, `n - 1` for the unit sphere.
    pub curvature: f64,
    pub quad: QuadratureConfig,
}

impl ExpansionConfig {
    /// `beta` defaults to the midpoint of the window.
    pub fn new(exps: Exponents, t: f64, beta: Option<f64>, epsilon_list: Vec<f64>) -> Result<Self> {
        let (lo, hi) = beta_window(exps);
        let cfg = Self {
            exps,
            t,
            beta: beta.unwrap_or(0.5 * (lo + hi)),
            epsilon_list,
            curvature: exps.dim() - 1.0,
            quad: QuadratureConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.exps;
        if !e.admits_expansion() {
            return Err(Error::InvalidConfig(format!(
                "the expansion requires n > 2p (n = {}, p = {})",
                e.n, e.p
            )));
        }
        let (lo, hi) = beta_window(e);
        if !(self.beta > lo && self.beta < hi) {
            return Err(Error::InvalidConfig(format!(
                "beta = {} outside the admissible window ({lo}, {hi})",
                self.beta
            )));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "T = {} must be positive",
                self.t
            )));
        }
        for &eps in &self.epsilon_list {
            if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "eps = {eps} must lie in (0, 1)"
                )));
            }
            check_support(eps, self.beta)?;
        }
        self.quad.validate()
    }
}

fn check_support(eps: f64, beta: f64) -> Result<()> {
    let r2 = 2.0 * eps.powf(beta);
    if r2 >= max_cutoff_radius() {
        return Err(Error::ChartDomain(format!(
            "cut-off radius 2 eps^beta = {r2} leaves the chart (needs < {})",
            max_cutoff_radius()
        )));
    }
    Ok(())
}

/// Chart data of the unit sphere at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartFactors {
    /// Volume Jacobian `(1 - x_n)^{n-1} / sqrt(1 - |x'|^2)`.
    pub jacobian: f64,
    /// Boundary Jacobian `1 / sqrt(1 - |x'|^2)`.
    pub boundary_jacobian: f64,
    /// Factor of `|d_{|x'|} w|^2` in `|grad u|^2`; the normal factor is `1`.
    pub tangential_metric: f64,
    /// `|f(x)|`, the distance of the image point from the chart centre.
    pub image_distance: f64,
}

/// `l(rho) = 1 - sqrt(1 - rho^2)`, without cancellation.
fn sphere_height(rho: f64) -> f64 {
    rho * rho / (1.0 + (1.0 - rho * rho).sqrt())
}

fn chart_factors(n: u32, rho: f64, xn: f64) -> ChartFactors {
    let c = (1.0 - rho * rho).sqrt();
    let s = 1.0 - xn;
    ChartFactors {
        jacobian: s.powi(n as i32 - 1) / c,
        boundary_jacobian: 1.0 / c,
        tangential_metric: c * c / (s * s),
        image_distance: (2.0 * sphere_height(rho) * s + xn * xn).sqrt(),
    }
}

/// Exact chart factors of the unit ball in `R^n` at `(|x'|, x_n)`.
pub fn ball_chart_factors(n: u32, xprime_norm: f64, xn: f64) -> Result<ChartFactors> {
    let rho = xprime_norm;
    if !(rho >= 0.0 && xn >= 0.0 && rho.hypot(xn) < CHART_RADIUS) {
        return Err(Error::ChartDomain(format!(
            "(|x'|, x_n) = ({rho}, {xn}) outside the chart of radius {CHART_RADIUS}"
        )));
    }
    Ok(chart_factors(n, rho, xn))
}

/// `|x'|` on the level set `|f(x)| = radius` at height `x_n`, or `None` if the level
/// set misses that height.
fn level_rho(radius: f64, xn: f64) -> Option<f64> {
    let l = (radius * radius - xn * xn) / (2.0 * (1.0 - xn));
    if l <= 0.0 {
        return None;
    }
    Some((l * (2.0 - l)).sqrt())
}

/// `1 - (10 s^3 - 15 s^4 + 6 s^5)` on `[r1, r2]`, and its derivative.
fn ramp(s: f64, r1: f64, r2: f64) -> (f64, f64) {
    if s <= r1 {
        return (1.0, 0.0);
    }
    if s >= r2 {
        return (0.0, 0.0);
    }
    let w = r2 - r1;
    let u = (s - r1) / w;
    let v = 1.0 - u;
    (
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u),
        -30.0 * u * u * v * v / w,
    )
}

/// Energy, volume and trace of the glued function at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub eps: f64,
    pub energy: Estimate,
    pub volume: Estimate,
    pub trace: Estimate,
    /// Energy carried by the cut-off annulus `eps^beta < |y| < 2 eps^beta`.
    pub annulus_energy: Estimate,
}

struct Ansatz {
    n: u32,
    prof: TranslatedProfile,
    eps: f64,
    r1: f64,
    r2: f64,
}

impl Ansatz {
    fn new(prof: TranslatedProfile, eps: f64, beta: f64) -> Self {
        let r1 = eps.powf(beta);
        Self {
            n: prof.exponents.n,
            prof,
            eps,
            r1,
            r2: 2.0 * r1,
        }
    }

    /// Value and gradient components `(w, d_rho w, d_n w)` in the rescaled chart
    /// coordinates `z = x / eps`, with the chart factors at `x`.
    fn eval(&self, rho: f64, zn: f64) -> (f64, f64, f64, ChartFactors) {
        let eps = self.eps;
        let (xr, xn) = (eps * rho, eps * zn);
        let ch = chart_factors(self.n, xr, xn);
        let s = ch.image_distance;
        let (phi, dphi) = ramp(s, self.r1, self.r2);
        if phi == 0.0 {
            return (0.0, 0.0, 0.0, ch);
        }
        let c = self.prof.normalization;
        let h = zn - self.prof.offset;
        let r = rho.hypot(h);
        let u = c * self.prof.shape(r);
        let du = c * self.prof.shape_slope(r);
        let (ur, un) = if r > 0.0 {
            (du * rho / r, du * h / r)
        } else {
            (0.0, 0.0)
        };
        if dphi == 0.0 {
            return (phi * u, phi * ur, phi * un, ch);
        }
        // ds/dx in the chart, times eps for the z-derivative
        let dl = xr / (1.0 - xr * xr).sqrt();
        let ds_r = (1.0 - xn) * dl / s;
        let ds_n = (xn - sphere_height(xr)) / s;
        (
            phi * u,
            phi * ur + eps * dphi * ds_r * u,
            phi * un + eps * dphi * ds_n * u,
            ch,
        )
    }

    fn energy_density(&self, rho: f64, zn: f64) -> f64 {
        let (_, wr, wn, ch) = self.eval(rho, zn);
        let g2 = wn * wn + ch.tangential_metric * wr * wr;
        g2.powf(0.5 * self.prof.exponents.p) * ch.jacobian
    }

    fn volume_density(&self, rho: f64, zn: f64) -> f64 {
        let (w, _, _, ch) = self.eval(rho, zn);
        w.abs().powf(self.prof.exponents.p_star) * ch.jacobian
    }

    fn trace_density(&self, rho: f64) -> f64 {
        let (w, _, _, ch) = self.eval(rho, 0.0);
        w.abs().powf(self.prof.exponents.p_sharp) * ch.boundary_jacobian
    }

    /// Breakpoints of `[a, b]`: a doubling ladder from the bubble scale plus `extra`.
    fn ladder(&self, a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
        let mut pts = vec![a, b];
        let mut x = 1.0 / 16.0;
        while x < b {
            if x > a {
                pts.push(x);
            }
            x *= 2.0;
        }
        let t = self.prof.offset;
        pts.extend(
            extra
                .iter()
                .copied()
                .chain([t.abs()])
                .filter(|&x| x > a && x < b),
        );
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `sigma_{n-2} int int rho^{n-2} density(rho, z_n)` over `lo < |f(eps z)| < hi`.
    fn area_integral<F: Fn(f64, f64) -> f64>(
        &self,
        density: F,
        lo: f64,
        hi: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Estimate> {
        let eps = self.eps;
        let k = self.n as i32 - 2;
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let inner_rel = 0.1 * cfg.rel_tol;
        // the measured quantities are of order one
        let floor = 1e-6 * cfg.rel_tol;
        let outer = |zn: f64| -> f64 {
            let xn = eps * zn;
            let Some(rmax) = level_rho(hi, xn) else {
                return 0.0;
            };
            let rmin = if lo > 0.0 {
                level_rho(lo, xn).unwrap_or(0.0)
            } else {
                0.0
            };
            if rmax <= rmin {
                return 0.0;
            }
            let r1 = level_rho(self.r1, xn).map(|r| r / eps);
            let pts = self.ladder(rmin / eps, rmax / eps, &r1.into_iter().collect::<Vec<_>>());
            match integrate(
                |rho| rho.powi(k) * density(rho, zn),
                &pts,
                inner_rel,
                floor,
                cfg.max_subdivisions,
            ) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let top = hi / eps;
        let pts = self.ladder(0.0, top, &[lo / eps, self.r1 / eps]);
        let est = integrate(outer, &pts, cfg.rel_tol, floor, cfg.max_subdivisions)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let area = unit_sphere_area(self.n - 2);
        Ok(Estimate::new(
            area * est.value,
            area * (est.error + inner_rel * est.value.abs() + floor * top),
        ))
    }

    fn trace_integral(&self, cfg: &QuadratureConfig) -> Result<Estimate> {
        let k = self.n as i32 - 2;
        let top = level_rho(self.r2, 0.0).expect("positive radius") / self.eps;
        let r1 = level_rho(self.r1, 0.0).expect("positive radius") / self.eps;
        let pts = self.ladder(0.0, top, &[r1]);
        let est = integrate(
            |rho| rho.powi(k) * self.trace_density(rho),
            &pts,
            cfg.rel_tol,
            1e-6 * cfg.rel_tol,
            cfg.max_subdivisions,
        )?;
        Ok(est.scaled(unit_sphere_area(self.n - 2)))
    }
}

/// Builds the glued function `phi_eps * (U_T^{(eps)} o g)` on the unit ball for the
/// given profile and measures its energy, volume and trace, together with the energy
/// of the cut-off annulus.
pub fn measure_profile(
    prof: &TranslatedProfile,
    eps: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<Measurement> {
    check_support(eps, beta)?;
    let a = Ansatz::new(*prof, eps, beta);
    let energy = a.area_integral(|r, z| a.energy_density(r, z), 0.0, a.r2, cfg)?;
    let volume = a.area_integral(|r, z| a.volume_density(r, z), 0.0, a.r2, cfg)?;
    let annulus_energy = a.area_integral(|r, z| a.energy_density(r, z), a.r1, a.r2, cfg)?;
    let trace = a.trace_integral(cfg)?;
    Ok(Measurement {
        eps,
        energy,
        volume,
        trace,
        annulus_energy,
    })
}

/// Value of the glued function at chart point `(|x'|, x_n)` of the unit ball.
pub fn ansatz_value(
    prof: &TranslatedProfile,
    eps: f64,
    beta: f64,
    xprime_norm: f64,
    xn: f64,
) -> Result<f64> {
    let ch = ball_chart_factors(prof.exponents.n, xprime_norm, xn)?;
    let a = Ansatz::new(*prof, eps, beta);
    if ch.image_distance >= a.r2 {
        return Ok(0.0);
    }
    let scale = eps.powf(-(prof.exponents.dim() - prof.exponents.p) / prof.exponents.p);
    Ok(scale * a.eval(xprime_norm / eps, xn / eps).0)
}

/// The half-space minimizer at level `T` and its measurements at one scale.
pub fn assemble_and_measure(cfg: &ExpansionConfig, eps: f64) -> Result<Measurement> {
    cfg.validate()?;
    let solver = CurveSolver::new(cfg.exps, cfg.quad)?;
    let prof = solver.solve_h(cfg.t)?.profile(cfg.exps)?;
    measure_profile(&prof, eps, cfg.beta, &cfg.quad)
}

/// Least-squares line `y = a + b x`, with the largest absolute residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    pub max_residual: f64,
}

pub fn affine_fit(x: &[f64], y: &[f64]) -> Result<AffineFit> {
    let m = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::FitDegeneracy(
            "need at least two paired samples".into(),
        ));
    }
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitDegeneracy("abscissas coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    Ok(AffineFit {
        intercept,
        slope,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRun {
    pub config: ExpansionConfig,
    /// Sorted by decreasing `eps`.
    pub records: Vec<Measurement>,
    pub energy_fit: AffineFit,
    pub volume_fit: AffineFit,
    pub trace_fit: AffineFit,
    /// `-H Lambda(U_T)`.
    pub energy_target: f64,
    /// `-H M(U_T)`.
    pub volume_target: f64,
    pub energy_slope_error: f64,
    pub volume_slope_error: f64,
    /// Relative slope errors of consecutive pairs of scales, coarsest first.
    pub energy_pair_errors: Vec<f64>,
    pub volume_pair_errors: Vec<f64>,
    pub refinement_monotone: bool,
    /// Exponent `gamma` of the leading correction `eps^gamma` to the energy slope.
    pub extrapolation_exponent: f64,
    /// Energy slope extrapolated from the two finest pairs; reported, not asserted.
    pub energy_extrapolated_slope: f64,
    /// `annulus_energy / max(eps^{(1-beta)(n-p)/(p-1)}, eps^{beta(n-p)})` per scale.
    pub gluing_constants: Vec<f64>,
    pub gluing_ok: bool,
    pub energy_ok: bool,
    pub volume_ok: bool,
    pub trace_ok: bool,
    pub pass: bool,
    pub tolerances: std::collections::BTreeMap<String, f64>,
}

/// `max(eps^{(1-beta)(n-p)/(p-1)}, eps^{beta(n-p)})`.
pub fn gluing_rate(exps: Exponents, beta: f64, eps: f64) -> f64 {
    let (n, p) = (exps.dim(), exps.p);
    eps.powf((1.0 - beta) * (n - p) / (p - 1.0))
        .max(eps.powf(beta * (n - p)))
}

/// Exponent of the leading correction to the energy slope: the cut-off tail and the
/// gluing annulus contribute `eps^{1 + gamma}`, and the second-order term `eps^2`.
pub fn extrapolation_exponent(exps: Exponents, beta: f64) -> f64 {
    let (n, p) = (exps.dim(), exps.p);
    ((1.0 - beta) * (n - p) / (p - 1.0) - 1.0)
        .min(beta * (n - p) - 1.0)
        .min(1.0)
}

/// Measures every scale, fits affine models in `eps` and compares the slopes with the
/// first-order predictions `-H Lambda(U_T)`, `-H M(U_T)` and `0`.
pub fn epsilon_slope_check(cfg: &ExpansionConfig) -> Result<ExpansionRun> {
    cfg.validate()?;
    let mut eps = cfg.epsilon_list.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::InvalidConfig(
            "at least three distinct scales are required".into(),
        ));
    }
    if eps[0] < 10.0 * eps[eps.len() - 1] {
        return Err(Error::InvalidConfig(
            "the scales must span at least one decade".into(),
        ));
    }
    let solver = CurveSolver::new(cfg.exps, cfg.quad)?;
    let prof = solver.solve_h(cfg.t)?.profile(cfg.exps)?;
    let lam = lambda_functional(&prof, &cfg.quad)?.value;
    let m = halfspace_moment(&prof, MomentKind::VolumeXn, &cfg.quad)?.value;
    let energy_target = -cfg.curvature * lam;
    let volume_target = -cfg.curvature * m;

    let records: Vec<Measurement> = eps
        .par_iter()
        .map(|&e| measure_profile(&prof, e, cfg.beta, &cfg.quad))
        .collect::<Result<_>>()?;
    let energy: Vec<f64> = records.iter().map(|r| r.energy.value).collect();
    let volume: Vec<f64> = records.iter().map(|r| r.volume.value).collect();
    let trace: Vec<f64> = records.iter().map(|r| r.trace.value).collect();
    let energy_fit = affine_fit(&eps, &energy)?;
    let volume_fit = affine_fit(&eps, &volume)?;
    let trace_fit = affine_fit(&eps, &trace)?;

    let span = eps[0] - eps[eps.len() - 1];
    for (name, fit, target) in [
        ("energy", &energy_fit, energy_target),
        ("volume", &volume_fit, volume_target),
    ] {
        if fit.max_residual > SLOPE_TOL * target.abs() * span {
            return Err(Error::FitDegeneracy(format!(
                "{name} residual {:e} exceeds the linear band {:e}; the scales are not yet asymptotic",
                fit.max_residual,
                SLOPE_TOL * target.abs() * span
            )));
        }
    }

    let rel = |s: f64, t: f64| (s - t).abs() / t.abs();
    let pair = |y: &[f64], t: f64| -> Vec<f64> {
        eps.windows(2)
            .zip(y.windows(2))
            .map(|(e, v)| rel((v[0] - v[1]) / (e[0] - e[1]), t))
            .collect()
    };
    let energy_pair_errors = pair(&energy, energy_target);
    let volume_pair_errors = pair(&volume, volume_target);
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let refinement_monotone =
        nonincreasing(&energy_pair_errors) && nonincreasing(&volume_pair_errors);

    let gamma = extrapolation_exponent(cfg.exps, cfg.beta);
    let energy_extrapolated_slope = {
        let j = eps.len() - 3;
        let mid = |i: usize| (0.5 * (eps[i] + eps[i + 1])).powf(gamma);
        let s = |i: usize| (energy[i] - energy[i + 1]) / (eps[i] - eps[i + 1]);
        let (a, b) = (mid(j), mid(j + 1));
        (s(j + 1) * a - s(j) * b) / (a - b)
    };

    let gluing_constants: Vec<f64> = records
        .iter()
        .map(|r| r.annulus_energy.value / gluing_rate(cfg.exps, cfg.beta, r.eps))
        .collect();
    let gluing_ok = gluing_constants
        .iter()
        .all(|&c| c <= GLUING_STABILITY * gluing_constants[0]);

    let energy_slope_error = rel(energy_fit.slope, energy_target);
    let volume_slope_error = rel(volume_fit.slope, volume_target);
    let energy_ok = energy_slope_error <= SLOPE_TOL;
    let volume_ok = volume_slope_error <= SLOPE_TOL;
    let trace_ok = trace_fit.slope.abs() <= SLOPE_TOL * volume_target.abs();
    let tolerances = [
        ("slope_relative", SLOPE_TOL),
        ("trace_slope_band", SLOPE_TOL * volume_target.abs()),
        ("gluing_stability", GLUING_STABILITY),
        ("quadrature_rel_tol", cfg.quad.rel_tol),
        ("chart_radius", CHART_RADIUS),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Ok(ExpansionRun {
        config: ExpansionConfig {
            epsilon_list: eps.clone(),
            ..cfg.clone()
        },
        records,
        energy_fit,
        volume_fit,
        trace_fit,
        energy_target,
        volume_target,
        energy_slope_error,
        volume_slope_error,
        energy_pair_errors,
        volume_pair_errors,
        refinement_monotone,
        extrapolation_exponent: gamma,
        energy_extrapolated_slope,
        gluing_constants,
        gluing_ok,
        energy_ok,
        volume_ok,
        trace_ok,
        pass: energy_ok && volume_ok && trace_ok && gluing_ok && refinement_monotone,
        tolerances,
    })
}
