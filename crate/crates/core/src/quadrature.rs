//! Globally adaptive Gauss-Kronrod (10/21) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077282527126766,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// How the radial truncation radius of a semi-infinite integral is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Smallest radius whose analytic tail bound is below
    /// `min(abs_tol, 0.1 * rel_tol * |integral over the core|)`.
    DecayEnvelope,
    /// Fixed radius (diagnostics only); the tail bound at that radius is still
    /// folded into the error estimate.
    FixedRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub truncation: TruncationPolicy,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            truncation: TruncationPolicy::DecayEnvelope,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol {} must be > 0",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "abs_tol {} must be > 0",
                self.abs_tol
            )));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::InvalidConfig(format!(
                "max_subdivisions {} must be at least 10",
                self.max_subdivisions
            )));
        }
        if let TruncationPolicy::FixedRadius(r) = self.truncation {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("fixed truncation radius {r}")));
            }
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.value * k, self.error * k.abs())
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate::new(self.value + o.value, self.error + o.error)
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate::new(self.value - o.value, self.error + o.error)
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff_limited: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 10];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        *slot = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    let res_abs = res_abs * h;
    let res_asc = res_asc * h;
    let error = rescale_error((res_k - res_g) * half, res_abs, res_asc);
    Panel {
        a,
        b,
        value,
        error,
        roundoff_limited: error <= 50.0 * f64::EPSILON * res_abs,
    }
}

/// Adaptive integration of `f` over `[points[0], points[last]]`, with the interior
/// points used as initial subdivisions.  Stops once the summed error estimate is
/// below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::Domain(
            "integration needs at least two points".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&f, w[0], w[1]));
        } else if w[1] < w[0] {
            return Err(Error::Domain(format!(
                "integration breakpoints not increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    if heap.is_empty() {
        return Ok(Estimate::default());
    }
    let mut count = heap.len();
    loop {
        let (value, error): (f64, f64) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonConvergence {
                subdivisions: count,
                value,
                error,
            });
        }
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate::new(value, error));
        }
        // every remaining panel is at the roundoff floor: nothing left to gain
        let worst = *heap.peek().expect("non-empty heap");
        if worst.roundoff_limited || count >= max_subdivisions {
            let residual: f64 = heap
                .iter()
                .filter(|p| !p.roundoff_limited)
                .map(|p| p.error)
                .sum();
            if residual <= tol {
                return Ok(Estimate::new(value, error));
            }
            if count >= max_subdivisions {
                return Err(Error::NonConvergence {
                    subdivisions: count,
                    value,
                    error,
                });
            }
        }
        let p = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // interval can no longer be split in floating point
            heap.push(Panel {
                roundoff_limited: true,
                ..p
            });
            if heap.iter().all(|q| q.roundoff_limited) {
                return Ok(Estimate::new(value, error));
            }
            continue;
        }
        heap.push(kronrod21(&f, p.a, mid));
        heap.push(kronrod21(&f, mid, p.b));
        count += 1;
    }
}

/// Integrates `f` over `[a, b]` (`0 < a < b`) in the variable `u = ln x`, which keeps
/// power-law tails cheap.
pub fn integrate_log<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::Domain(format!(
            "log-scale integration needs 0 < a <= b, got [{a}, {b}]"
        )));
    }
    let (la, lb) = (a.ln(), b.ln());
    let pieces = ((lb - la) / 2.0).ceil().max(1.0) as usize;
    let pts: Vec<f64> = (0..=pieces)
        .map(|i| la + (lb - la) * i as f64 / pieces as f64)
        .collect();
    integrate(
        |u| {
            let x = u.exp();
            f(x) * x
        },
        &pts,
        rel_tol,
        abs_tol,
        max_subdivisions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_polynomials() {
        // Kronrod 21 is exact to degree 31, the embedded Gauss 10 rule to degree 19
        for deg in 0..=31 {
            let p = kronrod21(&|x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((p.value - exact).abs() < 1e-14, "degree {deg}");
            if deg <= 19 {
                assert!(p.error < 1e-13, "degree {deg}: {}", p.error);
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], 1e-10, 0.0, 500).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
        assert!(est.error < 1e-9);
    }

    #[test]
    fn log_scale_power_tail() {
        let est = integrate_log(|x: f64| x.powf(-2.5), 1.0, 1e12, 1e-12, 0.0, 500).unwrap();
        let exact = (1.0 - 1e12f64.powf(-1.5)) / 1.5;
        assert!((est.value - exact).abs() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| (1.0 / x).sin() / x, &[1e-9, 1.0], 1e-14, 0.0, 12);
        assert!(matches!(err, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            max_subdivisions: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
