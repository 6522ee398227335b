//! SAA objective and recourse-likelihood tables over `(n, m, N)`.

use std::time::Instant;

use anyhow::Result;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use padded_saa::feasibility::estimate_recourse_likelihood;
use padded_saa::model::TwoStageProblem;
use padded_saa::saa::solve_saa;
use padded_saa::sampling::{draw_iid_sample, DistributionSpec};
use padded_saa::trp::{generate_trp, TrpConfig};

use super::{join_vec, ExperimentKind, ExperimentSpec};
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};
use crate::stats::Summary;
use crate::workers::ordered_map;

/// One line of the table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub obj_mean: f64,
    pub obj_ci: f64,
    pub obj_min: f64,
    pub obj_max: f64,
    /// `1 - phi_hat`, as a fraction.
    pub viol_mean: f64,
    pub viol_ci: f64,
    pub viol_min: f64,
    pub viol_max: f64,
    pub replications: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub status: String,
    pub objective: Option<f64>,
    pub violation: Option<f64>,
    pub x: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRecord {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub solve_s: f64,
    pub eval_s: f64,
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub integer: bool,
    pub rows: Vec<TableRow>,
    pub raw: Vec<RawRecord>,
    pub timing: Vec<TimingRecord>,
}

/// Outcome of one SAA replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub objective: Option<f64>,
    pub violation: Option<f64>,
    pub x: Vec<f64>,
    pub status: String,
    pub solve_s: f64,
    pub eval_s: f64,
}

/// Solves SAA on one training sample and estimates `1 - phi` on a fresh one.
pub fn replicate_saa(
    p: &TwoStageProblem,
    dist: &DistributionSpec,
    sample_size: usize,
    eval_samples: usize,
    train_seed: u64,
    eval_seed: u64,
) -> Replication {
    let t0 = Instant::now();
    let solved = draw_iid_sample(dist, sample_size, train_seed).and_then(|s| solve_saa(p, &s));
    let solve_s = t0.elapsed().as_secs_f64();
    let sol = match solved {
        Ok(s) => s,
        Err(e) => {
            return Replication {
                objective: None,
                violation: None,
                x: vec![],
                status: format!("solve failed: {e}"),
                solve_s,
                eval_s: 0.0,
            }
        }
    };
    let t1 = Instant::now();
    let est = estimate_recourse_likelihood(p, &sol.x, dist, eval_samples, eval_seed);
    let eval_s = t1.elapsed().as_secs_f64();
    match est {
        Ok(e) => Replication {
            objective: Some(sol.objective),
            violation: Some(e.violation()),
            x: sol.x,
            status: "ok".into(),
            solve_s,
            eval_s,
        },
        Err(e) => Replication {
            objective: Some(sol.objective),
            violation: None,
            x: sol.x,
            status: format!("evaluation failed: {e}"),
            solve_s,
            eval_s,
        },
    }
}

/// Aggregates replications into one row; failed replications are counted and excluded.
pub fn aggregate(n: usize, m: usize, sample_size: usize, reps: &[Replication]) -> TableRow {
    let ok: Vec<&Replication> = reps.iter().filter(|r| r.status == "ok").collect();
    let obj = Summary::of(&ok.iter().filter_map(|r| r.objective).collect::<Vec<_>>()).unwrap_or_else(Summary::empty);
    let viol = Summary::of(&ok.iter().filter_map(|r| r.violation).collect::<Vec<_>>()).unwrap_or_else(Summary::empty);
    TableRow {
        n,
        m,
        sample_size,
        obj_mean: obj.mean,
        obj_ci: obj.ci,
        obj_min: obj.min,
        obj_max: obj.max,
        viol_mean: viol.mean,
        viol_ci: viol.ci,
        viol_min: viol.min,
        viol_max: viol.max,
        replications: ok.len(),
        failures: reps.len() - ok.len(),
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<TableReport> {
    let integer = spec.experiment == ExperimentKind::TableInteger;
    let mut report = TableReport {
        integer,
        rows: vec![],
        raw: vec![],
        timing: vec![],
    };
    for &size in &spec.sizes {
        let mut cfg = TrpConfig::base(size.n, size.m, spec.instance_seed(size, 0));
        cfg.integer = integer;
        let inst = generate_trp(&cfg)?;
        for &nn in &spec.sample_sizes {
            let reps = ordered_map(spec.reps, |r| {
                replicate_saa(
                    &inst.problem,
                    &inst.spec,
                    nn,
                    spec.eval_samples,
                    spec.train_seed(size, nn, r),
                    spec.eval_seed(size, nn, r),
                )
            });
            for (r, rep) in reps.iter().enumerate() {
                if rep.status != "ok" {
                    warn!("({size}, N={nn}) replication {r}: {}", rep.status);
                }
                report.raw.push(RawRecord {
                    n: size.n,
                    m: size.m,
                    sample_size: nn,
                    rep: r,
                    train_seed: spec.train_seed(size, nn, r),
                    eval_seed: spec.eval_seed(size, nn, r),
                    status: rep.status.clone(),
                    objective: rep.objective,
                    violation: rep.violation,
                    x: join_vec(&rep.x),
                });
                report.timing.push(TimingRecord {
                    n: size.n,
                    m: size.m,
                    sample_size: nn,
                    rep: r,
                    solve_s: rep.solve_s,
                    eval_s: rep.eval_s,
                });
            }
            let row = aggregate(size.n, size.m, nn, &reps);
            info!(
                "({size}, N={nn}): objective {:.2} +- {:.2}, violation {:.3}% +- {:.3}%",
                row.obj_mean,
                row.obj_ci,
                100.0 * row.viol_mean,
                100.0 * row.viol_ci
            );
            report.rows.push(row);
        }
    }
    Ok(report)
}

impl TableReport {
    pub fn plot(&self) -> Plot {
        let mut series = Vec::new();
        let mut keys: Vec<(usize, usize)> = self.rows.iter().map(|r| (r.n, r.m)).collect();
        keys.dedup();
        for (n, m) in keys {
            let rows: Vec<&TableRow> = self.rows.iter().filter(|r| (r.n, r.m) == (n, m)).collect();
            series.push(Series::new(
                format!("({n},{m}) violation %"),
                rows.iter().map(|r| (r.sample_size as f64, 100.0 * r.viol_mean)).collect(),
            ));
            series.push(
                Series::new(
                    format!("({n},{m}) objective"),
                    rows.iter().map(|r| (r.sample_size as f64, r.obj_mean)).collect(),
                )
                .on_secondary()
                .dashed(),
            );
        }
        Plot {
            title: format!(
                "SAA on TRP, {} first stage",
                if self.integer { "integer" } else { "continuous" }
            ),
            x_label: "sample size N".into(),
            y_label: "mean 1 - recourse likelihood (%)".into(),
            y2_label: Some("mean SAA objective".into()),
            log_y: false,
            series,
        }
    }

    pub fn write(&self, mut w: ArtifactWriter, config: &serde_json::Value) -> Result<String> {
        w.csv(".csv", &self.rows)?;
        w.csv("_raw.csv", &self.raw)?;
        w.csv("_timing.csv", &self.timing)?;
        w.text(".svg", &self.plot().to_svg())?;
        w.manifest(config)?;
        Ok(self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "({},{},{:>4})  obj {:8.2} +- {:5.2} [{:.1}, {:.1}]  viol {:6.3}% +- {:5.3}% [{:.3}%, {:.3}%]  failures {}",
                    r.n,
                    r.m,
                    r.sample_size,
                    r.obj_mean,
                    r.obj_ci,
                    r.obj_min,
                    r.obj_max,
                    100.0 * r.viol_mean,
                    100.0 * r.viol_ci,
                    100.0 * r.viol_min,
                    100.0 * r.viol_max,
                    r.failures
                )
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }
}
