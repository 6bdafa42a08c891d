//! Machine-checkable reports for the key inequality, the comparison chain and the
//! interpolation inequalities.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{ball_moments, CurveSolver, PhiPoint, Regime};
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::halfspace::{halfspace_moment, lambda_functional, MomentKind};
use crate::quadrature::QuadratureConfig;

/// A strict inequality passes when its margin exceeds this multiple of the
/// propagated error estimate.
pub const STRICTNESS_FACTOR: f64 = 10.0;
/// Relative agreement required between the key margin and its decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-5;
/// Relative tolerance for the equality cases (Escobar point, minimum value).
pub const EQUALITY_TOL: f64 = 1e-6;
pub const MINIMUM_VALUE_TOL: f64 = 1e-4;
/// Quadrature tolerance for the comparison chain: `Phi_H(T) - T^{p#}/p#` falls to
/// about `1e-11 Phi_H` at the top of the default grid.
pub const COMPARISON_REL_TOL: f64 = 1e-12;
/// Ball levels within this relative distance of `ISO(B)^{1/p#}` are skipped; for `p = 2`
/// the computed `T_E` sits there.
pub const BALL_ENDPOINT_GAP: f64 = 1e-8;
/// Roundoff allowance of the interpolation inequality.
pub const INTERPOLATION_SLACK: f64 = 1e-9;

/// Outcome of one claim over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub statement: String,
    pub n: u32,
    pub p: f64,
    pub grid: Vec<f64>,
    /// `None` marks an inconclusive point.
    pub margins: Vec<Option<f64>>,
    pub errors: Vec<Option<f64>>,
    pub min_margin: Option<f64>,
    pub inconclusive: Vec<usize>,
    pub failures: Vec<usize>,
    pub pass: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ClaimRecord {
    fn new(id: &str, statement: &str, exps: Exponents) -> Self {
        Self {
            id: id.into(),
            statement: statement.into(),
            n: exps.n,
            p: exps.p,
            grid: vec![],
            margins: vec![],
            errors: vec![],
            min_margin: None,
            inconclusive: vec![],
            failures: vec![],
            pass: false,
            tolerances: BTreeMap::new(),
            notes: vec![],
        }
    }

    fn push(&mut self, t: f64, margin: Option<(f64, f64)>, ok: bool) {
        let i = self.grid.len();
        self.grid.push(t);
        match margin {
            Some((m, e)) => {
                self.margins.push(Some(m));
                self.errors.push(Some(e));
                self.min_margin = Some(self.min_margin.map_or(m, |x| x.min(m)));
                if !ok {
                    self.failures.push(i);
                }
            }
            None => {
                self.margins.push(None);
                self.errors.push(None);
                self.inconclusive.push(i);
            }
        }
    }

    fn finish(mut self) -> Self {
        self.pass =
            !self.grid.is_empty() && self.failures.is_empty() && self.inconclusive.is_empty();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: u32,
    pub p: f64,
    pub quadrature: QuadratureConfig,
    pub claims: Vec<ClaimRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn claim(&self, id: &str) -> Option<&ClaimRecord> {
        self.claims.iter().find(|c| c.id == id)
    }
}

/// `samples` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln();
            (0..samples)
                .map(|i| {
                    if i == samples - 1 {
                        hi
                    } else {
                        lo * (ratio * i as f64 / (samples - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `samples` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => vec![],
        1 => vec![lo],
        _ => (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
            .collect(),
    }
}

/// Adds `extra` points to a grid, keeping it sorted and free of duplicates.
pub fn augment_grid(grid: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = grid.iter().chain(extra).copied().collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// The 64-point log grid on `[T_E/20, 20 T_E]` together with `T_0` and `T_E`.
pub fn default_grid(solver: &CurveSolver) -> Vec<f64> {
    let k = &solver.constants;
    augment_grid(&log_grid(k.t_e / 20.0, 20.0 * k.t_e, 64), &[k.t_0, k.t_e])
}

/// Ingredients of the key inequality at one solved point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyMargin {
    #[serde(rename = "T")]
    pub t: f64,
    pub regime: Regime,
    /// `Lambda(U_T) - (n-p)/n lambda_H(T) M(U_T)`.
    pub margin: f64,
    pub margin_error: f64,
    pub lambda_functional: f64,
    pub volume_moment: f64,
    pub lambda: f64,
    pub fine1: f64,
    pub fine2: f64,
    /// `(p/n) fine2 + ((n-p)/n) fine1`.
    pub decomposition: f64,
    pub decomposition_residual: f64,
}

/// Key-inequality margin at a solved half-space point.
pub fn key_margin_at(
    point: &PhiPoint,
    exps: Exponents,
    cfg: &QuadratureConfig,
) -> Result<KeyMargin> {
    if !exps.has_finite_first_moments() {
        return Err(Error::UnsupportedRegime {
            what: "key inequality",
            n: exps.n,
            p: exps.p,
        });
    }
    let prof = point.profile(exps)?;
    let lam = lambda_functional(&prof, cfg)?;
    let m = halfspace_moment(&prof, MomentKind::VolumeXn, cfg)?;
    let f1 = halfspace_moment(&prof, MomentKind::Fine1, cfg)?;
    let f2 = halfspace_moment(&prof, MomentKind::Fine2, cfg)?;
    let (n, p) = (exps.dim(), exps.p);
    let w = (n - p) / n;
    let margin = lam.value - w * point.lambda * m.value;
    let margin_error = lam.error + w * point.lambda.abs() * m.error;
    let decomposition = p / n * f2.value + w * f1.value;
    let scale = margin.abs().max(decomposition.abs());
    let decomposition_residual = (margin - decomposition).abs() / scale;
    Ok(KeyMargin {
        t: point.t,
        regime: point.regime,
        margin,
        margin_error,
        lambda_functional: lam.value,
        volume_moment: m.value,
        lambda: point.lambda,
        fine1: f1.value,
        fine2: f2.value,
        decomposition,
        decomposition_residual,
    })
}

/// `Lambda(U_T) - ((n-p)/n) lambda_H(T) M(U_T)`, checked against the
/// integration-by-parts decomposition.
pub fn key_inequality_margin(t: f64, exps: Exponents, cfg: &QuadratureConfig) -> Result<KeyMargin> {
    if !exps.has_finite_first_moments() {
        return Err(Error::UnsupportedRegime {
            what: "key inequality",
            n: exps.n,
            p: exps.p,
        });
    }
    let solver = CurveSolver::new(exps, *cfg)?;
    let km = key_margin_at(&solver.solve_h(t)?, exps, cfg)?;
    if km.decomposition_residual > DECOMPOSITION_TOL {
        return Err(Error::ConstancyViolation {
            quantity: "key-inequality decomposition",
            spread: km.decomposition_residual,
            tolerance: DECOMPOSITION_TOL,
        });
    }
    Ok(km)
}

/// Key inequality, its decomposition and the positivity of both fine integrals over
/// a grid.
pub fn key_report(
    solver: &CurveSolver,
    grid: &[f64],
) -> Result<(VerificationReport, Vec<Option<KeyMargin>>)> {
    let exps = solver.exps;
    if !exps.has_finite_first_moments() {
        return Err(Error::UnsupportedRegime {
            what: "key inequality",
            n: exps.n,
            p: exps.p,
        });
    }
    let cfg = solver.cfg;
    let rows: Vec<Option<KeyMargin>> = grid
        .par_iter()
        .map(|&t| {
            solver
                .solve_h(t)
                .and_then(|pt| key_margin_at(&pt, exps, &cfg))
                .ok()
        })
        .collect();

    let mut key = ClaimRecord::new(
        "key_inequality",
        "Lambda(U_T) - ((n-p)/n) lambda_H(T) M(U_T) > 0",
        exps,
    );
    key.tolerances
        .insert("strictness_factor".into(), STRICTNESS_FACTOR);
    let mut dec = ClaimRecord::new(
        "key_decomposition",
        "margin = (p/n) fine2 + ((n-p)/n) fine1",
        exps,
    );
    dec.tolerances.insert("relative".into(), DECOMPOSITION_TOL);
    let mut fine = ClaimRecord::new("fine_positivity", "fine1 > 0 and fine2 > 0", exps);
    for (&t, row) in grid.iter().zip(&rows) {
        match row {
            Some(k) => {
                key.push(
                    t,
                    Some((k.margin, k.margin_error)),
                    k.margin > STRICTNESS_FACTOR * k.margin_error,
                );
                dec.push(
                    t,
                    Some((k.decomposition_residual, 0.0)),
                    k.decomposition_residual <= DECOMPOSITION_TOL,
                );
                let m = k.fine1.min(k.fine2);
                fine.push(t, Some((m, 0.0)), m > 0.0);
            }
            None => {
                key.push(t, None, false);
                dec.push(t, None, false);
                fine.push(t, None, false);
            }
        }
    }
    if let Some(m) = key.min_margin {
        key.notes.push(format!(
            "observed minimum margin {m:e} over the grid (empirical lower envelope only)"
        ));
    }
    Ok((
        VerificationReport {
            n: exps.n,
            p: exps.p,
            quadrature: cfg,
            claims: vec![key.finish(), dec.finish(), fine.finish()],
        },
        rows,
    ))
}

fn phi_error(pt: &PhiPoint) -> f64 {
    pt.phi * pt.residuals.quadrature.max(f64::EPSILON)
}

/// Comparison chain over `grid`: `Phi_B < Phi_H` (on the part of the grid inside the
/// ball range), `Phi_H(T) >= (E/T_E) T` with equality only at `T_E`,
/// `Phi_H(T) > T^{p#}/p#`, and the minimum of `Phi_H` at `T_0`.
pub fn comparison_report(solver: &CurveSolver, grid: &[f64]) -> VerificationReport {
    let exps = solver.exps;
    let k = solver.constants;
    let h: Vec<Option<PhiPoint>> = grid.par_iter().map(|&t| solver.solve_h(t).ok()).collect();
    let ball_grid: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < k.iso_b_root * (1.0 - BALL_ENDPOINT_GAP))
        .collect();
    let b: Vec<Option<PhiPoint>> = ball_grid
        .par_iter()
        .map(|&t| solver.solve_b(t).ok())
        .collect();

    let mut a = ClaimRecord::new("ball_below_halfspace", "Phi_B(T) < Phi_H(T)", exps);
    a.tolerances
        .insert("strictness_factor".into(), STRICTNESS_FACTOR);
    for (&t, pb) in ball_grid.iter().zip(&b) {
        let ph = grid
            .iter()
            .position(|&g| g == t)
            .and_then(|i| h[i].as_ref());
        match (ph, pb) {
            (Some(ph), Some(pb)) => {
                let m = ph.phi - pb.phi;
                let e = phi_error(ph) + phi_error(pb);
                a.push(t, Some((m, e)), m > STRICTNESS_FACTOR * e);
            }
            _ => a.push(t, None, false),
        }
    }

    let e_trace = k.e / k.t_e;
    let mut bnd = ClaimRecord::new(
        "escobar_linear_bound",
        "Phi_H(T) >= (E/T_E) T, with equality only at T = T_E",
        exps,
    );
    bnd.tolerances
        .insert("strictness_factor".into(), STRICTNESS_FACTOR);
    bnd.tolerances
        .insert("equality_relative".into(), EQUALITY_TOL);
    bnd.notes.push(format!(
        "E = Phi_H(T_E) = {:.16e}; linear slope E/T_E = {:.16e}",
        k.e, e_trace
    ));
    let mut div = ClaimRecord::new("divergence_bound", "Phi_H(T) > T^{p#}/p#", exps);
    div.tolerances
        .insert("strictness_factor".into(), STRICTNESS_FACTOR);
    for (&t, ph) in grid.iter().zip(&h) {
        match ph {
            Some(ph) => {
                let m = ph.phi - e_trace * ph.t;
                let e = phi_error(ph) + e_trace * ph.t * 1e-9;
                let ok = if ph.regime == Regime::Escobar {
                    m.abs() <= EQUALITY_TOL * ph.phi
                } else {
                    m > STRICTNESS_FACTOR * e
                };
                bnd.push(t, Some((m, e)), ok);
                let md = ph.phi - ph.t.powf(exps.p_sharp) / exps.p_sharp;
                let ed = phi_error(ph);
                div.push(t, Some((md, ed)), md > STRICTNESS_FACTOR * ed);
            }
            None => {
                bnd.push(t, None, false);
                div.push(t, None, false);
            }
        }
    }

    let mut min = ClaimRecord::new(
        "minimum_at_t0",
        "min of Phi_H over the grid sits at the point nearest T_0, with value S/2^{1/n}",
        exps,
    );
    min.tolerances
        .insert("value_relative".into(), MINIMUM_VALUE_TOL);
    let target = k.s * 2f64.powf(-1.0 / exps.dim());
    let nearest = grid
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - k.t_0).abs().total_cmp(&(y.1 - k.t_0).abs()))
        .map(|(i, _)| i);
    let argmin = h
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.as_ref().map(|p| (i, p.phi)))
        .min_by(|x, y| x.1.total_cmp(&y.1));
    match (argmin, nearest) {
        (Some((i, v)), Some(j)) if h.iter().all(Option::is_some) => {
            let rel = (v - target).abs() / target;
            min.push(
                grid[i],
                Some((rel, 0.0)),
                i == j && rel <= MINIMUM_VALUE_TOL,
            );
            min.notes.push(format!(
                "argmin index {i}, nearest-to-T_0 index {j}, minimum {v:.16e}, S/2^(1/n) = {target:.16e}"
            ));
        }
        _ => min.push(k.t_0, None, false),
    }

    VerificationReport {
        n: exps.n,
        p: exps.p,
        quadrature: solver.cfg,
        claims: vec![a.finish(), bnd.finish(), div.finish(), min.finish()],
    }
}

/// One trial function `eta(|x|/alpha)` restricted to the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSample {
    pub alpha: f64,
    pub gradient_norm: f64,
    pub trace_norm: f64,
    pub volume_norm: f64,
    /// `||grad u||/S + ||u||_{dB}/ISO(B)^{1/p#} - ||u||_{p*}`, relative to `||u||_{p*}`.
    pub margin: f64,
    /// Largest `C` for which the additive form holds at this sample, if any.
    pub additive_constant: Option<f64>,
}

/// Dilations `alpha` used by [`interpolation_spot_checks`]: log-spaced in `[1e-3, 1e3]`.
pub fn interpolation_dilations(samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![1.0];
    }
    log_grid(1e-3, 1e3, samples)
}

pub fn interpolation_samples(
    solver: &CurveSolver,
    samples: usize,
) -> Result<Vec<InterpolationSample>> {
    if samples == 0 {
        return Err(Error::InvalidConfig(
            "at least one sample is required".into(),
        ));
    }
    let exps = solver.exps;
    let k = solver.constants;
    interpolation_dilations(samples)
        .par_iter()
        .map(|&alpha| {
            let (vol, tr, en) = ball_moments(alpha, exps, &solver.cfg)?;
            let g = en.value.powf(1.0 / exps.p);
            let b = tr.powf(1.0 / exps.p_sharp);
            let v = vol.value.powf(1.0 / exps.p_star);
            let margin = (g / k.s + b / k.iso_b_root - v) / v;
            let rest = v.powf(exps.p) - (g / k.s).powf(exps.p);
            Ok(InterpolationSample {
                alpha,
                gradient_norm: g,
                trace_norm: b,
                volume_norm: v,
                margin,
                additive_constant: (rest > 0.0).then(|| b.powf(exps.p) / rest),
            })
        })
        .collect()
}

/// The sharp interpolation inequality on dilated bubbles restricted to the unit ball,
/// and the best additive constant observed on the same sample.
pub fn interpolation_spot_checks(
    solver: &CurveSolver,
    samples: usize,
) -> Result<VerificationReport> {
    let exps = solver.exps;
    let rows = interpolation_samples(solver, samples)?;
    let mut inter = ClaimRecord::new(
        "sharp_interpolation",
        "||grad u||/S + ||u||_{L^p#(dB)}/ISO(B)^{1/p#} >= ||u||_{L^p*(B)}",
        exps,
    );
    inter.tolerances.insert("slack".into(), INTERPOLATION_SLACK);
    let mut add = ClaimRecord::new(
        "additive_constant",
        "||grad u||^p/S^p + ||u||^p_{L^p#(dB)}/C >= ||u||^p_{L^p*(B)}: observed C",
        exps,
    );
    for r in &rows {
        inter.push(
            r.alpha,
            Some((r.margin, 0.0)),
            r.margin >= -INTERPOLATION_SLACK,
        );
        add.push(
            r.alpha,
            Some((r.additive_constant.unwrap_or(f64::INFINITY), 0.0)),
            true,
        );
    }
    let c = rows
        .iter()
        .filter_map(|r| r.additive_constant)
        .fold(f64::INFINITY, f64::min);
    add.notes.push(if c.is_finite() {
        format!("largest constant valid on the sample: {c:.16e} (reported, not asserted)")
    } else {
        "no sample constrains the constant".into()
    });
    Ok(VerificationReport {
        n: exps.n,
        p: exps.p,
        quadrature: solver.cfg,
        claims: vec![inter.finish(), add.finish()],
    })
}
