//! Half-space, boundary and full-space integrals of translated radial profiles.
//!
//! With `H = {x_n > 0}` and a profile radial about `t e_n`, every integral over `H`
//! is written in polar coordinates `(r, phi)` about the centre, with `phi` the angle
//! from `+e_n`.  The sphere of radius `r` meets `H` in the cap `phi < phi_max(r, t)`,
//! and on that cap `x_n = t + r cos(phi)`.  Integrating out the remaining
//! `(n-2)`-sphere leaves one-dimensional angular kernels built from
//! `int_0^phi_max sin^k`, which are closed form, so every moment becomes a single
//! radial quadrature.  The `(partial_1 U)^2` weight uses the slice average
//! `<omega_1^2> = sin^2(phi)/(n-1)` over the `(n-2)`-sphere of fixed polar angle.
//!
//! Radial integrals are cut at a radius chosen from the power-law tail bounds of
//! [`decay_envelope`](crate::profile::decay_envelope); the bound at the cut is added
//! to the reported error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::profile::{
    decay_envelope, envelope_radius, tail_rate, ProfileFamily, TailQuantity, TranslatedProfile,
};
use crate::quadrature::{integrate, integrate_log, Estimate, QuadratureConfig, TruncationPolicy};
use crate::sphere::{unit_ball_volume, unit_sphere_area, Cap};

/// Integrals over `H` (or `dH`) that this module can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `int_H U^{p*}`
    Volume,
    /// `int_{dH} U^{p#}`
    Trace,
    /// `int_H |grad U|^p`
    Energy,
    /// `int_H x_n U^{p*}`
    VolumeXn,
    /// `int_H x_n |grad U|^p`
    EnergyXn,
    /// `int_H x_n (partial_1 U)^2 |grad U|^{p-2}`
    EnergyXnD1,
    /// `int_H U |grad U|^{p-2} (-partial_n U)`
    Fine1,
    /// `int_H x_n |grad U|^{p-2} ((partial_n U)^2 - (partial_1 U)^2)`
    Fine2,
}

impl MomentKind {
    pub const ALL: [MomentKind; 8] = [
        MomentKind::Volume,
        MomentKind::Trace,
        MomentKind::Energy,
        MomentKind::VolumeXn,
        MomentKind::EnergyXn,
        MomentKind::EnergyXnD1,
        MomentKind::Fine1,
        MomentKind::Fine2,
    ];

    fn needs_first_moments(self) -> bool {
        matches!(
            self,
            MomentKind::EnergyXn | MomentKind::EnergyXnD1 | MomentKind::Fine1 | MomentKind::Fine2
        )
    }

    fn tail(self) -> TailQuantity {
        match self {
            MomentKind::Volume => TailQuantity::PstarMass,
            MomentKind::Trace => TailQuantity::TracePsharpMass,
            MomentKind::Energy => TailQuantity::GradPMass,
            MomentKind::VolumeXn => TailQuantity::PstarFirstMoment,
            MomentKind::EnergyXn | MomentKind::EnergyXnD1 | MomentKind::Fine2 => {
                TailQuantity::GradPFirstMoment
            }
            MomentKind::Fine1 => TailQuantity::ValueGradMass,
        }
    }

    /// Degree of homogeneity in the normalization constant.
    fn homogeneity(self, e: &Exponents) -> f64 {
        match self {
            MomentKind::Volume | MomentKind::VolumeXn => e.p_star,
            MomentKind::Trace => e.p_sharp,
            _ => e.p,
        }
    }
}

/// The standard set of half-space moments of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceMoments {
    pub volume: Estimate,
    pub trace: Estimate,
    pub energy: Estimate,
    pub volume_xn: Estimate,
    /// `None` unless `n > 2p - 1`.
    pub energy_xn: Option<Estimate>,
    /// `None` unless `n > 2p - 1`.
    pub energy_xn_d1: Option<Estimate>,
}

pub fn halfspace_moments(
    prof: &TranslatedProfile,
    cfg: &QuadratureConfig,
) -> Result<HalfSpaceMoments> {
    let first = prof.exponents.has_finite_first_moments();
    Ok(HalfSpaceMoments {
        volume: halfspace_moment(prof, MomentKind::Volume, cfg)?,
        trace: halfspace_moment(prof, MomentKind::Trace, cfg)?,
        energy: halfspace_moment(prof, MomentKind::Energy, cfg)?,
        volume_xn: halfspace_moment(prof, MomentKind::VolumeXn, cfg)?,
        energy_xn: if first {
            Some(halfspace_moment(prof, MomentKind::EnergyXn, cfg)?)
        } else {
            None
        },
        energy_xn_d1: if first {
            Some(halfspace_moment(prof, MomentKind::EnergyXnD1, cfg)?)
        } else {
            None
        },
    })
}

/// Beyond-Escobar profiles whose singular sphere comes within this distance of the
/// boundary are refused.
pub const BEYOND_ESCOBAR_MIN_GAP: f64 = 1e-15;

fn check_conditioning(prof: &TranslatedProfile) -> Result<()> {
    if prof.family == ProfileFamily::BeyondEscobar && prof.gap < BEYOND_ESCOBAR_MIN_GAP {
        return Err(Error::Conditioning(format!(
            "beyond-Escobar gap {:e} is below {BEYOND_ESCOBAR_MIN_GAP:e}",
            prof.gap
        )));
    }
    Ok(())
}

/// Angular kernel of `kind` on the cap (already multiplied by the `(n-2)`-sphere
/// area), such that the integrand is `r^{n-1} * density(r) * kernel`.  On the cap
/// `x_n = r (cos phi - cos phi_max)`.
fn angular_kernel(kind: MomentKind, n: u32, cap: &Cap, r: f64) -> f64 {
    if cap.phi == 0.0 {
        return 0.0;
    }
    let k = n - 2;
    let nm1 = (n - 1) as f64;
    let inner = match kind {
        MomentKind::Volume | MomentKind::Energy => cap.sin_power(k),
        MomentKind::VolumeXn | MomentKind::EnergyXn => r * cap.first_moment(k),
        MomentKind::EnergyXnD1 => r * cap.first_moment(k + 2) / nm1,
        MomentKind::Fine1 => cap.sin.powi(k as i32 + 1) / (k as f64 + 1.0),
        // cos^2 - sin^2/(n-1) = 1 - sin^2 n/(n-1)
        MomentKind::Fine2 => r * (cap.first_moment(k) - cap.first_moment(k + 2) * n as f64 / nm1),
        MomentKind::Trace => unreachable!("trace is not a cap integral"),
    };
    unit_sphere_area(k) * inner
}

/// Radial density of `kind` for the unnormalized shape, with `x = r - 1`.
fn radial_density(prof: &TranslatedProfile, kind: MomentKind, r: f64, x: f64) -> f64 {
    let e = &prof.exponents;
    match kind {
        MomentKind::Volume | MomentKind::VolumeXn => prof.shape_excess(r, x).powf(e.p_star),
        MomentKind::Fine1 => {
            prof.shape_excess(r, x) * prof.shape_slope_excess(r, x).abs().powf(e.p - 1.0)
        }
        MomentKind::Trace => prof.shape_excess(r, x).powf(e.p_sharp),
        _ => prof.shape_slope_excess(r, x).abs().powf(e.p),
    }
}

/// Initial subdivision of `[lo, hi]`: a geometric ladder of widths `w0, 2 w0, ...`
/// from `lo`, plus the `extra` points.
fn core_breakpoints(lo: f64, hi: f64, w0: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    let mut w = w0;
    while lo + w < hi {
        pts.push(lo + w);
        w *= 2.0;
    }
    pts.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Smallest scale on which a profile varies near the boundary.
fn first_width(prof: &TranslatedProfile) -> f64 {
    match prof.family {
        ProfileFamily::BeyondEscobar => (0.25 * prof.gap).clamp(1e-300, 1.0 / 16.0),
        _ => 1.0 / 16.0,
    }
}

/// Chooses the outer cut radius (measured from the origin) for a tail of `quantity`.
fn truncation_radius(
    prof: &TranslatedProfile,
    quantity: TailQuantity,
    core: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let r0 = envelope_radius(prof);
    match cfg.truncation {
        TruncationPolicy::FixedRadius(r) => Ok(r.max(r0)),
        TruncationPolicy::DecayEnvelope => {
            let target = if core != 0.0 {
                cfg.abs_tol.min(0.1 * cfg.rel_tol * core.abs())
            } else {
                cfg.abs_tol
            };
            let at_r0 = decay_envelope(prof, quantity, r0)?;
            if at_r0 <= target {
                return Ok(r0);
            }
            let gamma = tail_rate(&prof.exponents, quantity);
            let r = r0 * (at_r0 / target).powf(1.0 / gamma);
            Ok(r.min(1e15 * r0))
        }
    }
}

/// Unnormalized (`c = 1`) value of `kind`.
fn unit_moment(
    prof: &TranslatedProfile,
    kind: MomentKind,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let unit = TranslatedProfile {
        normalization: 1.0,
        ..*prof
    };
    let prof = &unit;
    let e = &prof.exponents;
    let t = prof.offset;
    let r0 = envelope_radius(prof);
    let (rt, at) = (cfg.rel_tol, 0.0);
    let max = cfg.max_subdivisions;

    if kind == MomentKind::Trace {
        let sphere = unit_sphere_area(e.n - 2);
        let n2 = (e.n - 2) as i32;
        let f = |rho: f64| {
            let (r, x) = prof.boundary_radius(rho);
            sphere * rho.powi(n2) * radial_density(prof, kind, r, x)
        };
        // the beyond-Escobar spike has width ~ sqrt(2 gap) around rho = 0
        let w0 = match prof.family {
            ProfileFamily::BeyondEscobar => 0.25 * (prof.gap * (2.0 + prof.gap)).sqrt(),
            _ => 1.0 / 16.0,
        };
        let pts = core_breakpoints(0.0, r0, w0.min(1.0 / 16.0), &[]);
        let core = integrate(f, &pts, rt, at, max)?;
        let cut = truncation_radius(prof, kind.tail(), core.value, cfg)?;
        let mid = if cut > r0 {
            integrate_log(f, r0, cut, rt, at, max)?
        } else {
            Estimate::default()
        };
        let tail = decay_envelope(prof, kind.tail(), cut)?;
        return Ok(core + mid + Estimate::new(0.0, tail));
    }

    // integrate in d = r - lo, so that the distance to the plane (t < 0) and to the
    // singular sphere stay exact
    let lo = (-t).max(0.0);
    let hi = r0 + t.abs();
    let n1 = (e.n - 1) as i32;
    let excess = |d: f64, r: f64| match prof.family {
        ProfileFamily::BeyondEscobar => prof.gap + d,
        ProfileFamily::Escobar => d,
        ProfileFamily::Sobolev => r - 1.0,
    };
    let f = |d: f64| {
        let r = lo + d;
        if r <= 0.0 {
            return 0.0;
        }
        let cap = Cap::new(r, t, d);
        let ang = angular_kernel(kind, e.n, &cap, r);
        if ang == 0.0 {
            return 0.0;
        }
        r.powi(n1) * radial_density(prof, kind, r, excess(d, r)) * ang
    };
    let kink = if t > 0.0 { vec![t] } else { vec![] };
    let pts = core_breakpoints(0.0, hi - lo, first_width(prof), &kink);
    let core = integrate(f, &pts, rt, at, max)?;
    let cut = truncation_radius(prof, kind.tail(), core.value, cfg)?;
    let mid = if cut + t.abs() > hi {
        integrate_log(f, hi - lo, cut + t.abs() - lo, rt, at, max)?
    } else {
        Estimate::default()
    };
    // {r > cut + |t|} lies outside the ball of radius `cut` about the origin
    let tail = decay_envelope(prof, kind.tail(), cut)?;
    Ok(core + mid + Estimate::new(0.0, tail))
}

/// Value of the half-space integral `kind` for `prof`, with its error estimate.
pub fn halfspace_moment(
    prof: &TranslatedProfile,
    kind: MomentKind,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    let e = &prof.exponents;
    if kind.needs_first_moments() && !e.has_finite_first_moments() {
        return Err(Error::UnsupportedRegime {
            what: "first-moment integral",
            n: e.n,
            p: e.p,
        });
    }
    check_conditioning(prof)?;
    let unit = unit_moment(prof, kind, cfg)?;
    Ok(unit.scaled(prof.normalization.powf(kind.homogeneity(e))))
}

/// `Lambda(U) = int_H x_n |grad U|^p - p x_n (partial_1 U)^2 |grad U|^{p-2}`.
pub fn lambda_functional(prof: &TranslatedProfile, cfg: &QuadratureConfig) -> Result<Estimate> {
    let xn = halfspace_moment(prof, MomentKind::EnergyXn, cfg)?;
    let d1 = halfspace_moment(prof, MomentKind::EnergyXnD1, cfg)?;
    Ok(xn - d1.scaled(prof.exponents.p))
}

/// `M(U) = int_H x_n U^{p*}`.
pub fn volume_first_moment(prof: &TranslatedProfile, cfg: &QuadratureConfig) -> Result<Estimate> {
    halfspace_moment(prof, MomentKind::VolumeXn, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullSpaceKind {
    /// `int_{R^n} U^{p*}`
    Pstar,
    /// `int_{R^n} |grad U|^p`
    Energy,
}

/// Whole-space integrals of a Sobolev bubble (translation invariant, so the offset
/// plays no role).
pub fn fullspace_moment(
    prof: &TranslatedProfile,
    kind: FullSpaceKind,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if prof.family != ProfileFamily::Sobolev {
        return Err(Error::Domain(format!(
            "{:?} profiles are not integrable over R^n",
            prof.family
        )));
    }
    let centred = TranslatedProfile {
        offset: 0.0,
        normalization: 1.0,
        ..*prof
    };
    let e = &prof.exponents;
    let (hk, tail_q) = match kind {
        FullSpaceKind::Pstar => (MomentKind::Volume, TailQuantity::PstarMass),
        FullSpaceKind::Energy => (MomentKind::Energy, TailQuantity::GradPMass),
    };
    let area = e.dim() * unit_ball_volume(e.n);
    let n1 = (e.n - 1) as i32;
    let f = |r: f64| area * r.powi(n1) * radial_density(&centred, hk, r, r - 1.0);
    let r0 = envelope_radius(&centred);
    let pts = core_breakpoints(0.0, r0, 1.0 / 16.0, &[]);
    let core = integrate(f, &pts, cfg.rel_tol, 0.0, cfg.max_subdivisions)?;
    let cut = truncation_radius(&centred, tail_q, 0.5 * core.value, cfg)?;
    let mid = if cut > r0 {
        integrate_log(f, r0, cut, cfg.rel_tol, 0.0, cfg.max_subdivisions)?
    } else {
        Estimate::default()
    };
    // the half-space envelope bounds each of the two half-spaces
    let tail = 2.0 * decay_envelope(&centred, tail_q, cut)?;
    let unit = core + mid + Estimate::new(0.0, tail);
    Ok(unit.scaled(prof.normalization.powf(hk.homogeneity(e))))
}

/// `int_{{z_n > -s} on S^{n-1}} (z_n + s)(z_n^2 - z_1^2)`, the angular factor of the
/// `Fine2` integrand on the unit sphere; positive for `s` in `(-1, 1)`.
pub fn cap_sign_integral(n: u32, s: f64) -> f64 {
    angular_kernel(MomentKind::Fine2, n, &Cap::new(1.0, s, 1.0 - s.abs()), 1.0)
}

/// The two planar cap integrals
/// `int_{-a}^{pi+a} (sin x + sin a)(sin^2 x - cos^2 x) dx` and
/// `int_{a}^{pi-a} (sin x - sin a)(sin^2 x - cos^2 x) dx`, by adaptive quadrature.
pub fn reduced_cap_integrals(alpha: f64, cfg: &QuadratureConfig) -> Result<(Estimate, Estimate)> {
    let sa = alpha.sin();
    let w = |x: f64| x.sin().powi(2) - x.cos().powi(2);
    let outer = integrate(
        |x| (x.sin() + sa) * w(x),
        &[
            -alpha,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI + alpha,
        ],
        cfg.rel_tol.min(1e-13),
        1e-15,
        cfg.max_subdivisions,
    )?;
    let inner = if alpha < std::f64::consts::FRAC_PI_2 {
        integrate(
            |x| (x.sin() - sa) * w(x),
            &[
                alpha,
                std::f64::consts::FRAC_PI_2,
                std::f64::consts::PI - alpha,
            ],
            cfg.rel_tol.min(1e-13),
            1e-15,
            cfg.max_subdivisions,
        )?
    } else {
        Estimate::default()
    };
    Ok((outer, inner))
}
