//! Unit-sphere geometry: ball volumes, sphere areas and spherical-cap angular kernels.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    // omega_0 = 1, omega_1 = 2, omega_n = 2 pi / n * omega_{n-2}
    let mut w = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Total area of the unit `k`-sphere `S^k` in `R^{k+1}`; `S^0` consists of two points.
pub fn unit_sphere_area(k: u32) -> f64 {
    (k + 1) as f64 * unit_ball_volume(k + 1)
}

/// `int_0^pi sin^k`, from the recurrence `J_k = (k - 1)/k J_{k-2}`.
pub fn sin_power_full(k: u32) -> f64 {
    let mut j = if k % 2 == 0 { PI } else { 2.0 };
    let mut m = if k % 2 == 0 { 2 } else { 3 };
    while m <= k {
        j *= (m - 1) as f64 / m as f64;
        m += 2;
    }
    j
}

/// `int_0^phi sin^k(theta) d theta` for `phi` in `[0, pi]`.
pub fn sin_power_integral(k: u32, phi: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::Domain(format!("angle {phi} outside [0, pi]")));
    }
    Ok(sin_power_unchecked(k, phi))
}

pub(crate) fn sin_power_unchecked(k: u32, phi: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    if phi >= PI {
        return sin_power_full(k);
    }
    if phi > 0.5 * PI {
        return sin_power_full(k) - sin_power_unchecked(k, PI - phi);
    }
    let s = phi.sin();
    if s < 0.5 {
        return small_cap_series(k, s);
    }
    let c = phi.cos();
    let (mut lo, mut hi) = (phi, 2.0 * (0.5 * phi).sin().powi(2));
    if k == 0 {
        return lo;
    }
    if k == 1 {
        return hi;
    }
    // I_m = (-cos phi sin^{m-1} phi + (m - 1) I_{m-2}) / m, carried in two parity chains
    let mut m = 2;
    while m <= k {
        let next = (-c * s.powi(m as i32 - 1) + (m - 1) as f64 * lo) / m as f64;
        lo = hi;
        hi = next;
        m += 1;
    }
    hi
}

/// Series for `phi <= pi/2`, `s = sin phi`:
/// `int_0^phi sin^k = s^{k+1}/(k+1) * 2F1(1/2, (k+1)/2; (k+3)/2; s^2)`.
fn small_cap_series(k: u32, s: f64) -> f64 {
    let a = 0.5 * (k as f64 + 1.0);
    let x = s * s;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut j = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= (0.5 + j) * (a + j) / ((a + 1.0 + j) * (1.0 + j)) * x;
        sum += term;
        j += 1.0;
        if j > 400.0 {
            break;
        }
    }
    s.powi(k as i32 + 1) / (k as f64 + 1.0) * sum
}

/// Polar angle (measured from `+e_n`) bounding `{x_n > 0}` on the sphere of radius `r`
/// centred at `t e_n`.
pub fn cap_polar_limit(r: f64, t: f64) -> f64 {
    (-t / r).clamp(-1.0, 1.0).acos()
}

/// The polar cap `{phi < phi_max}` of the sphere of radius `r` about `t e_n` lying in
/// `{x_n > 0}`, with `sin` and `1 - cos` of `phi_max` formed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cap {
    pub phi: f64,
    pub sin: f64,
    pub cos: f64,
    pub one_minus_cos: f64,
    /// `x_n / r` at the south pole when the whole sphere lies in `{x_n > 0}`.
    pub lift: f64,
}

impl Cap {
    /// `d = r - |t|` must be supplied exactly when `t < 0`.
    pub fn new(r: f64, t: f64, d: f64) -> Cap {
        if t < 0.0 {
            if d <= 0.0 {
                return Cap {
                    phi: 0.0,
                    sin: 0.0,
                    cos: 1.0,
                    one_minus_cos: 0.0,
                    lift: 0.0,
                };
            }
            let omc = d / r;
            let phi = 2.0 * (0.5 * omc).sqrt().min(1.0).asin();
            let sin = (d * (r - t)).sqrt() / r;
            Cap {
                phi,
                sin: sin.min(1.0),
                cos: 1.0 - omc,
                one_minus_cos: omc,
                lift: 0.0,
            }
        } else if r <= t {
            Cap {
                phi: PI,
                sin: 0.0,
                cos: -1.0,
                one_minus_cos: 2.0,
                lift: (t - r) / r,
            }
        } else {
            let cos = -t / r;
            Cap {
                phi: cos.acos(),
                sin: ((r - t) * (r + t)).sqrt() / r,
                cos,
                one_minus_cos: 1.0 + t / r,
                lift: 0.0,
            }
        }
    }

    /// `int_0^phi_max sin^k`.
    pub fn sin_power(&self, k: u32) -> f64 {
        if self.phi <= 0.5 * PI && self.sin < 0.5 {
            if self.phi == 0.0 {
                return 0.0;
            }
            small_cap_series(k, self.sin)
        } else {
            sin_power_unchecked(k, self.phi)
        }
    }

    /// `int_0^phi_max (x_n / r) sin^k phi d phi`, where `x_n / r = cos phi - cos phi_max + lift`.
    pub fn first_moment(&self, k: u32) -> f64 {
        let s = self.sin;
        let lead = s.powi(k as i32 + 1) / (k as f64 + 1.0);
        if self.phi <= 0.5 * PI && s < 0.5 {
            if self.phi == 0.0 {
                return 0.0;
            }
            // lead * [(1 - c) - c * sum_{i >= 1} a_i s^{2i}], the series of the sin-power integral
            let a = 0.5 * (k as f64 + 1.0);
            let x = s * s;
            let mut term = 1.0f64;
            let mut tail = 0.0f64;
            let mut j = 0.0;
            loop {
                term *= (0.5 + j) * (a + j) / ((a + 1.0 + j) * (1.0 + j)) * x;
                tail += term;
                j += 1.0;
                if term.abs() <= 1e-18 * tail.abs() || j > 400.0 {
                    break;
                }
            }
            lead * (self.one_minus_cos - self.cos * tail)
        } else {
            (self.lift - self.cos) * sin_power_unchecked(k, self.phi) + lead
        }
    }
}
