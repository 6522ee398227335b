//! Single-shot subcommands: instance generation, solves, estimation, bounds.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use padded_saa::bounds::*;
use padded_saa::feasibility::estimate_recourse_likelihood;
use padded_saa::model::TwoStageProblem;
use padded_saa::padded::{
    build_padded_monotone, build_padded_rhs, separation_program_fixed_recourse, separation_program_general, solve_padded,
    Direction, PaddingMode, Separation, DEFAULT_BRUTE_FORCE_LIMIT,
};
use padded_saa::saa::{build_extensive_form, solve_saa, SaaSolution};
use padded_saa::sampling::{draw_iid_sample, DistributionSpec, SampleSet};
use padded_saa::solver_backend::dump_lp;
use padded_saa::trp::{generate_trp, TrpConfig};

/// Distribution plus optional monotone signs and pins, read either from a
/// bare distribution file or from the sidecar written by `trp-gen`.
#[derive(Debug, Clone)]
pub struct ScenarioInfo {
    pub dist: DistributionSpec,
    pub signs: Option<Vec<Direction>>,
    pub pins: Vec<Option<Direction>>,
}

#[derive(Deserialize)]
struct Sidecar {
    distribution: DistributionSpec,
    #[serde(default)]
    signs: Option<Vec<Direction>>,
    #[serde(default)]
    pins: Vec<Option<Direction>>,
}

pub fn read_scenario_info(path: &Path) -> Result<ScenarioInfo> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(s) = serde_json::from_str::<Sidecar>(&text) {
        return Ok(ScenarioInfo {
            dist: s.distribution,
            signs: s.signs,
            pins: s.pins,
        });
    }
    let dist: DistributionSpec =
        serde_json::from_str(&text).with_context(|| format!("{} is neither a sidecar nor a distribution", path.display()))?;
    Ok(ScenarioInfo {
        dist,
        signs: None,
        pins: vec![],
    })
}

pub fn read_problem(path: &Path) -> Result<TwoStageProblem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(TwoStageProblem::from_json(&text)?)
}

/// Sidecar path for an instance file: `a/b.json` -> `a/b.meta.json`.
pub fn sidecar_path(instance: &Path) -> PathBuf {
    instance.with_extension("meta.json")
}

/// Writes the problem JSON and its metadata sidecar; returns both paths.
pub fn trp_gen(cfg: &TrpConfig, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let inst = generate_trp(cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, inst.problem.to_json()?)?;
    let meta = sidecar_path(out);
    fs::write(&meta, serde_json::to_string_pretty(&inst.metadata())? + "\n")?;
    Ok((out.to_path_buf(), meta))
}

/// Training sample from a CSV file or drawn from the distribution.
pub fn load_sample(samples: Option<&Path>, info: Option<&ScenarioInfo>, n: Option<usize>, seed: u64) -> Result<SampleSet> {
    match (samples, info, n) {
        (Some(p), _, _) => {
            let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(SampleSet::read_csv(f)?)
        }
        (None, Some(i), Some(n)) => Ok(draw_iid_sample(&i.dist, n, seed)?),
        _ => bail!("give --samples, or --dist with --n"),
    }
}

pub fn saa(p: &TwoStageProblem, s: &SampleSet, dump: Option<&Path>) -> Result<SaaSolution> {
    if let Some(path) = dump {
        dump_lp(&build_extensive_form(p, s)?.program, path)?;
    }
    Ok(solve_saa(p, s)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    RhsOnly,
    Monotone,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SeparationArg {
    General,
    FixedRecourse,
    BruteForce,
}

pub fn padding_mode(mode: ModeArg, sep: SeparationArg, info: Option<&ScenarioInfo>) -> Result<PaddingMode> {
    Ok(match mode {
        ModeArg::RhsOnly => PaddingMode::RhsOnly,
        ModeArg::Monotone => PaddingMode::MonotoneShortcut {
            signs: info
                .and_then(|i| i.signs.clone())
                .ok_or_else(|| anyhow!("monotone padding needs a sidecar with signs (--dist)"))?,
        },
        ModeArg::Cg => PaddingMode::MixedScenarioCg {
            separation: match sep {
                SeparationArg::General => Separation::General,
                SeparationArg::FixedRecourse => Separation::FixedRecourse,
                SeparationArg::BruteForce => Separation::BruteForce {
                    limit: DEFAULT_BRUTE_FORCE_LIMIT,
                },
            },
            pins: info.map(|i| i.pins.clone()).unwrap_or_default(),
        },
    })
}

pub fn padded(
    p: &TwoStageProblem,
    s: &SampleSet,
    gamma: f64,
    mode: &PaddingMode,
    time_limit: Option<std::time::Duration>,
    dump: Option<&Path>,
) -> Result<serde_json::Value> {
    let (sol, trace) = solve_padded(p, s, gamma, mode, time_limit)?;
    if let Some(path) = dump {
        let program = match mode {
            PaddingMode::RhsOnly => build_padded_rhs(p, s, gamma)?.program,
            PaddingMode::MonotoneShortcut { signs } => build_padded_monotone(p, s, gamma, signs)?.program,
            // The master changes every iteration; dump the last separation MILP instead.
            PaddingMode::MixedScenarioCg { separation, pins } => match separation {
                Separation::FixedRecourse => separation_program_fixed_recourse(p, s, &sol.x, pins)?,
                _ => separation_program_general(p, s, &sol.x, pins)?,
            },
        };
        dump_lp(&program, path)?;
    }
    Ok(serde_json::json!({ "gamma": gamma, "solution": sol, "trace": trace }))
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

/// First-stage point from `--x a,b,c` or a solution JSON with an `x` field
/// (top level or under `solution`).
pub fn load_x(x: Option<&str>, solution: Option<&Path>) -> Result<Vec<f64>> {
    match (x, solution) {
        (Some(v), _) => parse_vector(v),
        (None, Some(p)) => {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p)?)?;
            let xv = v.get("x").or_else(|| v.get("solution").and_then(|s| s.get("x")));
            Ok(serde_json::from_value(xv.ok_or_else(|| anyhow!("no x in {}", p.display()))?.clone())?)
        }
        (None, None) => bail!("give --x or --solution"),
    }
}

pub fn estimate_phi(p: &TwoStageProblem, x: &[f64], info: &ScenarioInfo, m: usize, seed: u64) -> Result<serde_json::Value> {
    let e = estimate_recourse_likelihood(p, x, &info.dist, m, seed)?;
    Ok(serde_json::json!({
        "phi_hat": e.phi_hat,
        "violation": e.violation(),
        "ci_halfwidth": e.ci_halfwidth,
        "m": e.m,
        "seed": e.seed,
    }))
}

#[derive(Debug, Clone, clap::Subcommand)]
pub enum BoundsCmd {
    /// Sample size for recourse likelihood `1 - eps` in a two-stage LP.
    Lp {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n1: u64,
        #[arg(long)]
        n2: u64,
        #[arg(long)]
        m1: u64,
        #[arg(long)]
        m2: u64,
    },
    /// Log of the probability bound that SAA at sample size `n` misses `1 - eps`.
    Failure {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n1: u64,
        #[arg(long)]
        n2: u64,
        #[arg(long)]
        m1: u64,
        #[arg(long)]
        m2: u64,
    },
    /// Sample size for a finite feasible region.
    FiniteX {
        #[arg(long)]
        gamma_tilde: f64,
        #[arg(long)]
        excluded_count: u64,
        #[arg(long)]
        beta: f64,
    },
    /// Padding sample size for a product-form support with Lipschitz `H`.
    PaddedProduct {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        diameter: f64,
        #[arg(long)]
        lipschitz: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Padding sample size with random right-hand sides only.
    PaddedRhs {
        #[arg(long)]
        n2: u64,
        #[arg(long)]
        m2: u64,
        #[arg(long)]
        eta_tilde: f64,
        #[arg(long)]
        eps: f64,
    },
}

pub fn bounds(cmd: &BoundsCmd) -> Result<serde_json::Value> {
    Ok(match *cmd {
        BoundsCmd::Lp { eps, beta, n1, n2, m1, m2 } => {
            let inp = LpBoundInputs { eps, beta, n1, n2, m1, m2 };
            serde_json::json!({
                "inputs": inp,
                "value": sample_size_two_stage_lp_real(&inp)?,
                "sample_size": sample_size_two_stage_lp(&inp)?,
            })
        }
        BoundsCmd::Failure { n, eps, n1, n2, m1, m2 } => serde_json::json!({
            "log_bound": feasibility_failure_log(n, eps, n1, n2, m1, m2)?,
            "bound": feasibility_prob_bound(n, eps, n1, n2, m1, m2)?,
        }),
        BoundsCmd::FiniteX {
            gamma_tilde,
            excluded_count,
            beta,
        } => {
            let inp = FiniteXBoundInputs {
                rate: FiniteXRate::Direct { gamma_tilde },
                excluded_count,
                beta,
            };
            serde_json::json!({
                "value": sample_size_finite_x_real(&inp)?,
                "sample_size": sample_size_finite_x(&inp)?,
            })
        }
        BoundsCmd::PaddedProduct {
            d,
            diameter,
            lipschitz,
            gamma,
            eta,
            beta,
        } => {
            let inp = PaddingBoundInputs::ProductMarginal {
                d,
                diameter,
                lipschitz,
                gamma,
                eta,
                beta,
            };
            serde_json::json!({
                "inputs": inp,
                "value": sample_size_padded_real(&inp)?,
                "sample_size": sample_size_padded(&inp)?,
            })
        }
        BoundsCmd::PaddedRhs { n2, m2, eta_tilde, eps } => {
            let inp = PaddingBoundInputs::RhsOnly { n2, m2, eta_tilde, eps };
            serde_json::json!({
                "inputs": inp,
                "value": sample_size_padded_real(&inp)?,
                "sample_size": sample_size_padded(&inp)?,
            })
        }
    })
}
