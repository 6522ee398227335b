//! Desk-scale experiment protocols. Each `run` returns a typed report; the
//! `write` methods persist it through [`ArtifactWriter`].

pub mod bounds_report;
pub mod cg;
pub mod counterexample;
pub mod separation;
pub mod sweep;
pub mod table;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use padded_saa::sampling::{replication_seed, stream_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    TableContinuous,
    TableInteger,
    PaddingSweep,
    SeparationBenchmark,
    CgBenchmark,
    Counterexample,
    BoundsReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TableContinuous => "table_continuous",
            Self::TableInteger => "table_integer",
            Self::PaddingSweep => "padding_sweep",
            Self::SeparationBenchmark => "separation_benchmark",
            Self::CgBenchmark => "cg_benchmark",
            Self::Counterexample => "counterexample",
            Self::BoundsReport => "bounds_report",
        }
    }
}

/// TRP size `(n, m)` with factor count `l` (0 for the base variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl Size {
    pub const fn new(n: usize, m: usize, l: usize) -> Self {
        Self { n, m, l }
    }

    fn tag(&self) -> String {
        format!("{}-{}-{}", self.n, self.m, self.l)
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.l == 0 {
            write!(f, "{}x{}", self.n, self.m)
        } else {
            write!(f, "{}x{}x{}", self.n, self.m, self.l)
        }
    }
}

/// Parses `NxM` or `NxMxL`.
impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split('x').collect();
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad size {s:?}: {e}"));
        match parts.as_slice() {
            [n, m] => Ok(Size::new(num(n)?, num(m)?, 0)),
            [n, m, l] => Ok(Size::new(num(n)?, num(m)?, num(l)?)),
            _ => Err(format!("size must look like 10x10 or 10x10x5, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub sizes: Vec<Size>,
    pub sample_sizes: Vec<usize>,
    pub gammas: Vec<f64>,
    pub reps: usize,
    pub eval_samples: usize,
    pub seed: u64,
    /// MILP time limit in seconds.
    pub time_limit_s: f64,
    /// Binomial resolutions for the counterexample.
    pub bits: Vec<usize>,
    /// Directory receiving solver model dumps, when set.
    pub dump_lp: Option<PathBuf>,
}

pub fn gamma_grid(hi: f64, step: f64) -> Vec<f64> {
    let k = (hi / step).round() as usize;
    (0..=k).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
}

impl ExperimentSpec {
    /// Desk-scale defaults for each protocol.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            sizes: vec![],
            sample_sizes: vec![],
            gammas: vec![],
            reps: 20,
            eval_samples: 20_000,
            seed: 2024,
            time_limit_s: 60.0,
            bits: vec![],
            dump_lp: None,
        };
        match kind {
            ExperimentKind::TableContinuous => Self {
                sizes: vec![Size::new(10, 10, 0), Size::new(10, 40, 0)],
                sample_sizes: vec![100, 500, 1000],
                ..base
            },
            ExperimentKind::TableInteger => Self {
                sizes: vec![Size::new(5, 10, 0), Size::new(5, 40, 0)],
                sample_sizes: vec![50, 100, 500],
                ..base
            },
            ExperimentKind::PaddingSweep => Self {
                sizes: vec![Size::new(10, 10, 0)],
                sample_sizes: vec![100, 500, 1000],
                gammas: gamma_grid(2.0, 0.2),
                reps: 10,
                ..base
            },
            ExperimentKind::SeparationBenchmark => Self {
                sizes: vec![Size::new(10, 10, 5), Size::new(10, 10, 10), Size::new(10, 10, 20)],
                sample_sizes: vec![100],
                reps: 1,
                ..base
            },
            ExperimentKind::CgBenchmark => Self {
                sizes: vec![Size::new(10, 10, 10)],
                sample_sizes: vec![1000],
                gammas: gamma_grid(1.0, 0.1),
                reps: 1,
                ..base
            },
            ExperimentKind::Counterexample => Self {
                sample_sizes: vec![5, 10, 20, 50],
                bits: vec![1, 3, 6],
                reps: 2000,
                ..base
            },
            ExperimentKind::BoundsReport => Self {
                sizes: vec![Size::new(10, 10, 0), Size::new(10, 40, 0)],
                sample_sizes: vec![100, 500, 1000],
                reps: 1,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            bail!("reps must be at least 1");
        }
        if self.eval_samples == 0 {
            bail!("eval-samples must be at least 1");
        }
        if !(self.time_limit_s > 0.0) {
            bail!("time limit must be positive");
        }
        if self.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            bail!("padding levels must be finite and nonnegative");
        }
        if self.sample_sizes.contains(&0) {
            bail!("sample sizes must be positive");
        }
        let needs_trp = self.experiment != ExperimentKind::Counterexample;
        if needs_trp && (self.sizes.is_empty() || self.sample_sizes.is_empty()) {
            bail!("{} needs at least one size and one sample size", self.experiment.name());
        }
        let factor = matches!(self.experiment, ExperimentKind::SeparationBenchmark | ExperimentKind::CgBenchmark);
        for s in &self.sizes {
            if s.n == 0 || s.m == 0 {
                bail!("size {s} has an empty dimension");
            }
            if factor && s.l == 0 {
                bail!("{} runs on the factor variant; give sizes as NxMxL", self.experiment.name());
            }
            if !factor && s.l != 0 {
                bail!("{} runs on the base variant; give sizes as NxM", self.experiment.name());
            }
        }
        if matches!(self.experiment, ExperimentKind::PaddingSweep | ExperimentKind::CgBenchmark) && self.gammas.is_empty() {
            bail!("{} needs a padding grid", self.experiment.name());
        }
        if self.experiment == ExperimentKind::Counterexample {
            if self.bits.is_empty() || self.sample_sizes.is_empty() {
                bail!("counterexample needs bits and sample sizes");
            }
            if self.bits.iter().any(|&b| b == 0 || b > 12) {
                bail!("counterexample bits must lie in 1..=12");
            }
        }
        Ok(())
    }

    pub fn time_limit(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.time_limit_s)
    }

    /// Seed of the TRP instance of `size`, replicate `r` (shared across sample sizes).
    pub fn instance_seed(&self, size: Size, r: usize) -> u64 {
        replication_seed(stream_seed(self.seed, &format!("instance-{}", size.tag())), r as u64)
    }

    pub fn train_seed(&self, size: Size, n: usize, r: usize) -> u64 {
        replication_seed(stream_seed(self.seed, &format!("train-{}-{n}", size.tag())), r as u64)
    }

    pub fn eval_seed(&self, size: Size, n: usize, r: usize) -> u64 {
        replication_seed(stream_seed(self.seed, &format!("eval-{}-{n}", size.tag())), r as u64)
    }
}

/// Runs `spec` and writes its artifacts to `out_dir`; returns a short summary.
pub fn run_and_write(spec: &ExperimentSpec, out_dir: &Path) -> Result<String> {
    spec.validate()?;
    let config = serde_json::to_value(spec)?;
    let name = spec.experiment.name();
    let w = crate::output::ArtifactWriter::new(out_dir, name)?;
    let summary = match spec.experiment {
        ExperimentKind::TableContinuous | ExperimentKind::TableInteger => table::run(spec)?.write(w, &config)?,
        ExperimentKind::PaddingSweep => sweep::run(spec)?.write(w, &config)?,
        ExperimentKind::SeparationBenchmark => separation::run(spec)?.write(w, &config)?,
        ExperimentKind::CgBenchmark => cg::run(spec)?.write(w, &config)?,
        ExperimentKind::Counterexample => counterexample::run(spec)?.write(w, &config)?,
        ExperimentKind::BoundsReport => bounds_report::run(spec)?.write(w, &config)?,
    };
    Ok(summary)
}

pub(crate) fn join_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}
