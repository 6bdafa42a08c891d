//! `bsc`: best-Sobolev curves, constants and verification reports from the command line.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bsc_core::ansatz::{epsilon_slope_check, ExpansionConfig};
use bsc_core::verify::{
    augment_grid, comparison_report, default_grid, interpolation_samples,
    interpolation_spot_checks, key_report, linear_grid, VerificationReport, COMPARISON_REL_TOL,
};
use bsc_core::{CurveSolver, Error, PhiPoint};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Format, Params};

#[derive(Parser)]
#[command(
    name = "bsc",
    version,
    about = "Half-space and ball best-Sobolev curves"
)]
struct Cli {
    /// Flat JSON file with default values for the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// S, E, T_E, T_0 and ISO(B) with consistency diagnostics.
    Constants(Params),
    /// Tabulate Phi_H or Phi_B.
    Curve {
        #[command(subcommand)]
        which: CurveKind,
    },
    /// Run a verification report.
    Verify {
        #[command(subcommand)]
        which: VerifyKind,
    },
}

#[derive(Subcommand)]
enum CurveKind {
    Phih(Params),
    Phib(Params),
}

#[derive(Subcommand)]
enum VerifyKind {
    /// Key inequality and its decomposition.
    Key(Params),
    /// Comparison chain between the ball and half-space curves.
    Compare(Params),
    /// Interpolation inequalities on dilated bubbles in the unit ball.
    Interp(Params),
    /// First-order boundary-concentration expansion on the unit ball.
    Expansion(Params),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Validation,
    Computation,
    Check,
}

/// Machine-readable failure, printed as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub status: &'static str,
    pub kind: FailureKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<String>,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(FailureKind::Validation, message.into())
    }

    fn new(kind: FailureKind, message: String) -> Self {
        Self {
            status: if kind == FailureKind::Check {
                "fail"
            } else {
                "error"
            },
            kind,
            message,
            failed: vec![],
        }
    }

    fn checks(failed: Vec<String>) -> Self {
        Self {
            failed,
            ..Self::new(FailureKind::Check, "asserted checks failed".into())
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            FailureKind::Validation => 3,
            FailureKind::Computation | FailureKind::Check => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Domain(_)
            | Error::UnsupportedRegime { .. }
            | Error::OutOfRange(_)
            | Error::ChartDomain(_)
            | Error::InvalidConfig(_) => FailureKind::Validation,
            _ => FailureKind::Computation,
        };
        Self::new(kind, e.to_string())
    }
}

fn emit(params: &Params, text: &str) -> Result<(), Failure> {
    let io =
        |e: std::io::Error| Failure::new(FailureKind::Computation, format!("write failed: {e}"));
    match &params.out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(io),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::new(FailureKind::Computation, e.to_string()))
}

fn solver(params: &Params) -> Result<CurveSolver, Failure> {
    Ok(CurveSolver::new(params.exponents()?, params.quadrature()?)?)
}

fn quadrature_tolerances(s: &CurveSolver) -> BTreeMap<String, f64> {
    [
        ("rel_tol", s.cfg.rel_tol),
        ("abs_tol", s.cfg.abs_tol),
        ("max_subdivisions", s.cfg.max_subdivisions as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Serialize)]
struct ConstantsOut {
    n: u32,
    p: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "T_E")]
    t_e: f64,
    #[serde(rename = "T_0")]
    t_0: f64,
    #[serde(rename = "iso_B")]
    iso_b: f64,
    #[serde(rename = "iso_B_root")]
    iso_b_root: f64,
    diagnostics: BTreeMap<String, f64>,
    tolerances: BTreeMap<String, f64>,
}

fn constants(params: &Params) -> Result<(), Failure> {
    let s = solver(params)?;
    let k = s.constants;
    let p = s.exps.p;
    let at0 = s.solve_h(k.t_0)?;
    let ate = s.solve_h(k.t_e)?;
    let diagnostics = [
        (
            "midpoint_identity",
            (at0.phi * 2f64.powf(1.0 / s.exps.dim()) - k.s).abs() / k.s,
        ),
        ("escobar_point", (ate.phi - k.e).abs() / k.e),
        (
            "sigma_at_t0",
            at0.sigma.abs() * k.t_0.powf(s.exps.p_sharp) / at0.phi.powf(p),
        ),
        ("lambda_at_te", ate.lambda.abs() / ate.phi.powf(p)),
        ("identity_at_t0", at0.residuals.identity.abs()),
        ("identity_at_te", ate.residuals.identity.abs()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let out = ConstantsOut {
        n: s.exps.n,
        p,
        s: k.s,
        e: k.e,
        t_e: k.t_e,
        t_0: k.t_0,
        iso_b: k.iso_b,
        iso_b_root: k.iso_b_root,
        diagnostics,
        tolerances: quadrature_tolerances(&s),
    };
    emit(params, &to_json(&out)?)
}

fn curve_csv(points: &[PhiPoint]) -> String {
    let mut out = String::from("T,phi,regime,offset,c,lambda,sigma\n");
    for pt in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            pt.t,
            pt.phi,
            pt.regime.as_str(),
            pt.offset,
            pt.normalization,
            pt.lambda,
            pt.sigma
        ));
    }
    out
}

fn curve(params: &Params, ball: bool) -> Result<(), Failure> {
    let s = solver(params)?;
    let k = s.constants;
    let mut grid = match params.grid()? {
        Some(g) => g,
        None if ball => linear_grid(k.iso_b_root / 33.0, 32.0 * k.iso_b_root / 33.0, 32),
        None => default_grid(&s),
    };
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let solve = |t: f64| if ball { s.solve_b(t) } else { s.solve_h(t) };
    use rayon::prelude::*;
    let solved: Vec<PhiPoint> = grid
        .par_iter()
        .map(|&t| solve(t))
        .collect::<Result<_, _>>()?;
    // levels inside the Escobar band all land on T_E
    let mut points: Vec<PhiPoint> = Vec::with_capacity(solved.len());
    for pt in solved {
        if points.last().is_none_or(|q| pt.t > q.t) {
            points.push(pt);
        }
    }
    let text = match params.format.unwrap_or(Format::Csv) {
        Format::Csv => curve_csv(&points),
        Format::Json => to_json(&points)?,
    };
    emit(params, &text)
}

fn finish_report(params: &Params, text: String, failed: Vec<String>) -> Result<(), Failure> {
    emit(params, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::checks(failed))
    }
}

fn failed_claims(r: &VerificationReport) -> Vec<String> {
    r.claims
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.id.clone())
        .collect()
}

fn verify_key(params: &Params) -> Result<(), Failure> {
    let s = solver(params)?;
    let grid = params.grid()?.unwrap_or_else(|| default_grid(&s));
    let (report, margins) = key_report(&s, &grid)?;
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a VerificationReport,
        margins: Vec<Option<bsc_core::KeyMargin>>,
    }
    let text = to_json(&Out {
        report: &report,
        margins,
    })?;
    finish_report(params, text, failed_claims(&report))
}

fn verify_compare(params: &Params) -> Result<(), Failure> {
    let mut params = params.clone();
    params.rel_tol = params.rel_tol.or(Some(COMPARISON_REL_TOL));
    let params = &params;
    let s = solver(params)?;
    let k = s.constants;
    let grid = match params.grid()? {
        Some(g) => augment_grid(&g, &[k.t_0, k.t_e]),
        None => augment_grid(
            &default_grid(&s),
            &linear_grid(k.iso_b_root / 33.0, 32.0 * k.iso_b_root / 33.0, 32),
        ),
    };
    let report = comparison_report(&s, &grid);
    let text = to_json(&report)?;
    finish_report(params, text, failed_claims(&report))
}

fn verify_interp(params: &Params) -> Result<(), Failure> {
    let s = solver(params)?;
    let samples = params.samples.unwrap_or(25);
    let report = interpolation_spot_checks(&s, samples)?;
    #[derive(Serialize)]
    struct Out<'a> {
        report: &'a VerificationReport,
        samples: Vec<bsc_core::verify::InterpolationSample>,
    }
    let text = to_json(&Out {
        report: &report,
        samples: interpolation_samples(&s, samples)?,
    })?;
    finish_report(params, text, failed_claims(&report))
}

fn verify_expansion(params: &Params) -> Result<(), Failure> {
    let exps = params.exponents()?;
    let quad = params.quadrature()?;
    let t = match params.t {
        Some(t) => t,
        None => CurveSolver::new(exps, quad)?.constants.t_0,
    };
    let eps = params.eps.clone().unwrap_or_else(|| vec![3e-2, 1e-2, 3e-3]);
    let mut cfg = ExpansionConfig::new(exps, t, params.beta, eps)?;
    cfg.quad = quad;
    let run = epsilon_slope_check(&cfg)?;
    let failed: Vec<String> = [
        ("energy_slope", run.energy_ok),
        ("volume_slope", run.volume_ok),
        ("trace_slope", run.trace_ok),
        ("gluing_rate", run.gluing_ok),
        ("refinement_monotone", run.refinement_monotone),
    ]
    .into_iter()
    .filter(|(_, ok)| !ok)
    .map(|(id, _)| id.to_string())
    .collect();
    finish_report(params, to_json(&run)?, failed)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("BSC_THREADS") else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        Failure::validation(format!("BSC_THREADS must be an integer >= 1, got {v:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(FailureKind::Computation, e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let file = cli.config.as_deref();
    match cli.command {
        Command::Constants(p) => constants(&p.merged(file)?),
        Command::Curve { which } => match which {
            CurveKind::Phih(p) => curve(&p.merged(file)?, false),
            CurveKind::Phib(p) => curve(&p.merged(file)?, true),
        },
        Command::Verify { which } => match which {
            VerifyKind::Key(p) => verify_key(&p.merged(file)?),
            VerifyKind::Compare(p) => verify_compare(&p.merged(file)?),
            VerifyKind::Interp(p) => verify_interp(&p.merged(file)?),
            VerifyKind::Expansion(p) => verify_expansion(&p.merged(file)?),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "{}",
                serde_json::to_string(&f).unwrap_or_else(|_| f.message.clone())
            );
            ExitCode::from(f.exit_code())
        }
    }
}
