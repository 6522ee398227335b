use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use padded_saa::trp::TrpConfig;
use padded_saa_cli::commands::{self, BoundsCmd, ModeArg, SeparationArg};
use padded_saa_cli::experiments::{run_and_write, ExperimentKind, ExperimentSpec, Size};

#[derive(Parser)]
#[command(name = "padded-saa", version, about = "Two-stage stochastic LPs without relatively complete recourse")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SampleArgs {
    /// Problem JSON.
    #[arg(long)]
    problem: PathBuf,
    /// Training sample CSV (one scenario per row).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Distribution JSON or the sidecar written by trp-gen.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Sample size when drawing from --dist.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Write the solved model to this file (format from the extension, e.g. .lp or .mps).
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a TRP instance: problem JSON plus a `.meta.json` sidecar.
    TrpGen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Factor count; 0 gives the base (monotone) variant.
        #[arg(long, default_value_t = 0)]
        factors: usize,
        #[arg(long)]
        integer: bool,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the sample average approximation.
    SaaSolve(SampleArgs),
    /// Solve the padded SAA problem.
    PaddedSolve {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "cg")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "general")]
        separation: SeparationArg,
        /// Per-MILP time limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Estimate the recourse likelihood of a first-stage point.
    EstimatePhi {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        /// Comma-separated first-stage point.
        #[arg(long)]
        x: Option<String>,
        /// Solution JSON from saa-solve or padded-solve.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        eval_samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Evaluate a sample-size bound.
    Bounds {
        #[command(subcommand)]
        which: BoundsCmd,
    },
    /// Run an experiment protocol and write CSV, raw log, timings, manifest and plot.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentKind,
        /// Full spec as JSON; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        eval_samples: Option<usize>,
        /// Padding levels, comma-separated.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        /// MILP time limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Instance sizes such as 10x10 or 10x10x5, comma-separated.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<Size>>,
        #[arg(long, value_delimiter = ',')]
        sample_sizes: Option<Vec<usize>>,
        /// Binomial resolutions for the counterexample.
        #[arg(long, value_delimiter = ',')]
        bits: Option<Vec<usize>>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Directory for solver model dumps.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.cmd {
        Cmd::TrpGen {
            n,
            m,
            factors,
            integer,
            seed,
            out,
        } => {
            let mut cfg = if factors == 0 {
                TrpConfig::base(n, m, seed)
            } else {
                TrpConfig::factor(n, m, factors, seed)
            };
            cfg.integer = integer;
            let (p, meta) = commands::trp_gen(&cfg, &out)?;
            println!("{}\n{}", p.display(), meta.display());
        }
        Cmd::SaaSolve(a) => {
            let p = commands::read_problem(&a.problem)?;
            let info = a.dist.as_deref().map(commands::read_scenario_info).transpose()?;
            let s = commands::load_sample(a.samples.as_deref(), info.as_ref(), a.n, a.seed)?;
            let sol = commands::saa(&p, &s, a.dump_lp.as_deref())?;
            emit(&serde_json::to_value(&sol)?, a.out.as_deref())?;
        }
        Cmd::PaddedSolve {
            sample: a,
            gamma,
            mode,
            separation,
            time_limit,
        } => {
            let p = commands::read_problem(&a.problem)?;
            let info = a.dist.as_deref().map(commands::read_scenario_info).transpose()?;
            let s = commands::load_sample(a.samples.as_deref(), info.as_ref(), a.n, a.seed)?;
            let mode = commands::padding_mode(mode, separation, info.as_ref())?;
            let limit = time_limit.map(Duration::from_secs_f64);
            let v = commands::padded(&p, &s, gamma, &mode, limit, a.dump_lp.as_deref())?;
            emit(&v, a.out.as_deref())?;
        }
        Cmd::EstimatePhi {
            problem,
            dist,
            x,
            solution,
            eval_samples,
            seed,
        } => {
            let p = commands::read_problem(&problem)?;
            let info = commands::read_scenario_info(&dist)?;
            let x = commands::load_x(x.as_deref(), solution.as_deref())?;
            emit(&commands::estimate_phi(&p, &x, &info, eval_samples, seed)?, None)?;
        }
        Cmd::Bounds { which } => emit(&commands::bounds(&which)?, None)?,
        Cmd::Experiment {
            name,
            config,
            seed,
            reps,
            eval_samples,
            gamma,
            time_limit,
            sizes,
            sample_sizes,
            bits,
            out_dir,
            dump_lp,
        } => {
            let mut spec = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)?,
                None => ExperimentSpec::defaults(name),
            };
            spec.experiment = name;
            if let Some(v) = seed {
                spec.seed = v;
            }
            if let Some(v) = reps {
                spec.reps = v;
            }
            if let Some(v) = eval_samples {
                spec.eval_samples = v;
            }
            if let Some(v) = gamma {
                spec.gammas = v;
            }
            if let Some(v) = time_limit {
                spec.time_limit_s = v;
            }
            if let Some(v) = sizes {
                spec.sizes = v;
            }
            if let Some(v) = sample_sizes {
                spec.sample_sizes = v;
            }
            if let Some(v) = bits {
                spec.bits = v;
            }
            if dump_lp.is_some() {
                spec.dump_lp = dump_lp;
            }
            println!("{}", run_and_write(&spec, &out_dir)?);
            println!("artifacts in {}", out_dir.display());
        }
    }
    Ok(())
}
