use std::path::{Path, PathBuf};

use bsc_core::{Exponents, QuadratureConfig};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every command.  Each one may also come from the config file, whose
/// keys are the flag names with `-` replaced by `_`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Lower end of the trace-level grid.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Upper end of the trace-level grid.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub scale: Option<Scale>,
    /// Trace level of the expansion check.
    #[arg(long = "t")]
    pub t: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated scales of the expansion check.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Params {
    /// Flags win over the file.
    pub fn merged(mut self, file: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = file else { return Ok(self) };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base: Params = serde_json::from_str(&text)
            .map_err(|e| Failure::validation(format!("bad config {}: {e}", path.display())))?;
        overlay!(
            self,
            base,
            n,
            p,
            t_min,
            t_max,
            samples,
            scale,
            t,
            beta,
            eps,
            rel_tol,
            abs_tol,
            max_subdivisions,
            out,
            format
        );
        Ok(self)
    }

    pub fn exponents(&self) -> Result<Exponents, Failure> {
        let n = self
            .n
            .ok_or_else(|| Failure::validation("--n is required"))?;
        let p = self
            .p
            .ok_or_else(|| Failure::validation("--p is required"))?;
        Exponents::new(n, p).map_err(Failure::from)
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig, Failure> {
        let mut q = QuadratureConfig::default();
        if let Some(r) = self.rel_tol {
            q.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            q.abs_tol = a;
        }
        if let Some(m) = self.max_subdivisions {
            q.max_subdivisions = m;
        }
        q.validate().map_err(Failure::from)?;
        Ok(q)
    }

    /// The explicit grid, if `--t-min`/`--t-max` were given.
    pub fn grid(&self) -> Result<Option<Vec<f64>>, Failure> {
        let (lo, hi) = match (self.t_min, self.t_max) {
            (None, None) => return Ok(None),
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Failure::validation("--t-min and --t-max go together")),
        };
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Failure::validation(format!("bad grid range [{lo}, {hi}]")));
        }
        let samples = self.samples.unwrap_or(64);
        if samples == 0 {
            return Err(Failure::validation("--samples must be at least 1"));
        }
        Ok(Some(match self.scale.unwrap_or(Scale::Log) {
            Scale::Log => bsc_core::verify::log_grid(lo, hi, samples),
            Scale::Linear => bsc_core::verify::linear_grid(lo, hi, samples),
        }))
    }
}
