//! Constraint generation on the factor TRP over a padding grid.

use anyhow::Result;
use log::info;
use serde::{Deserialize, Serialize};

use padded_saa::padded::{constraint_generation_solve, CgOptions, CgStatus, Separation};
use padded_saa::sampling::draw_iid_sample;
use padded_saa::trp::{generate_trp, is_completely_reliable, TrpConfig};

use super::{ExperimentSpec, Size};
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};
use crate::stats::Summary;
use crate::workers::ordered_map;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgRow {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sample_size: usize,
    pub runs: usize,
    pub milps_mean: f64,
    pub milps_max: usize,
    pub certified: usize,
    /// Certified runs at `gamma > 0` whose solution is completely reliable.
    pub reliable: usize,
    pub reliable_checked: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgRecord {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub rep: usize,
    pub gamma: f64,
    pub status: String,
    pub milps: usize,
    pub trace_len: usize,
    pub cuts_added: usize,
    pub tightened: bool,
    pub objective: Option<f64>,
    pub reliable: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgTiming {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub rep: usize,
    pub gamma: f64,
    pub total_s: f64,
    pub separation_s: f64,
}

#[derive(Debug, Clone)]
pub struct CgReport {
    pub rows: Vec<CgRow>,
    pub raw: Vec<CgRecord>,
    pub timing: Vec<CgTiming>,
}

fn run_instance(spec: &ExperimentSpec, size: Size, nn: usize, rep: usize) -> Result<Vec<(CgRecord, CgTiming)>> {
    let inst = generate_trp(&TrpConfig::factor(size.n, size.m, size.l, spec.instance_seed(size, rep)))?;
    let s = draw_iid_sample(&inst.spec, nn, spec.train_seed(size, nn, rep))?;
    let opts = CgOptions {
        separation: Separation::FixedRecourse,
        pins: inst.pins.clone(),
        time_limit: Some(spec.time_limit()),
        ..CgOptions::default()
    };
    let mut out = Vec::new();
    for &g in &spec.gammas {
        let (rec, timing) = match constraint_generation_solve(&inst.problem, &s, g, &opts) {
            Ok((sol, trace)) => {
                let certified = trace.status == CgStatus::FeasibleCertified;
                let reliable = if certified && g > 0.0 {
                    Some(is_completely_reliable(&inst, &sol.x)?)
                } else {
                    None
                };
                info!(
                    "({size}) rep {rep} gamma {g}: {} MILPs, {:?}, objective {:.3}, reliable {reliable:?}",
                    trace.separations_solved, trace.status, sol.objective
                );
                (
                    CgRecord {
                        n: size.n,
                        m: size.m,
                        l: size.l,
                        rep,
                        gamma: g,
                        status: format!("{:?}", trace.status),
                        milps: trace.separations_solved,
                        trace_len: trace.iterations.len(),
                        cuts_added: trace.iterations.iter().filter(|i| i.added.is_some()).count(),
                        tightened: trace.tightened,
                        objective: Some(sol.objective),
                        reliable,
                    },
                    CgTiming {
                        n: size.n,
                        m: size.m,
                        l: size.l,
                        rep,
                        gamma: g,
                        total_s: trace.total_time_s,
                        separation_s: trace.separation_time_s,
                    },
                )
            }
            Err(e) => (
                CgRecord {
                    n: size.n,
                    m: size.m,
                    l: size.l,
                    rep,
                    gamma: g,
                    status: format!("failed: {e}"),
                    milps: 0,
                    trace_len: 0,
                    cuts_added: 0,
                    tightened: false,
                    objective: None,
                    reliable: None,
                },
                CgTiming {
                    n: size.n,
                    m: size.m,
                    l: size.l,
                    rep,
                    gamma: g,
                    total_s: f64::NAN,
                    separation_s: f64::NAN,
                },
            ),
        };
        out.push((rec, timing));
    }
    Ok(out)
}

pub fn run(spec: &ExperimentSpec) -> Result<CgReport> {
    let mut report = CgReport {
        rows: vec![],
        raw: vec![],
        timing: vec![],
    };
    for &size in &spec.sizes {
        for &nn in &spec.sample_sizes {
            let mut recs = Vec::new();
            for res in ordered_map(spec.reps, |r| run_instance(spec, size, nn, r)) {
                for (rec, t) in res? {
                    recs.push(rec);
                    report.timing.push(t);
                }
            }
            let ok: Vec<&CgRecord> = recs.iter().filter(|r| r.objective.is_some()).collect();
            let milps: Vec<f64> = ok.iter().map(|r| r.milps as f64).collect();
            report.rows.push(CgRow {
                n: size.n,
                m: size.m,
                l: size.l,
                sample_size: nn,
                runs: recs.len(),
                milps_mean: Summary::of(&milps).map_or(f64::NAN, |s| s.mean),
                milps_max: ok.iter().map(|r| r.milps).max().unwrap_or(0),
                certified: ok.iter().filter(|r| r.status == format!("{:?}", CgStatus::FeasibleCertified)).count(),
                reliable: ok.iter().filter(|r| r.reliable == Some(true)).count(),
                reliable_checked: ok.iter().filter(|r| r.reliable.is_some()).count(),
            });
            report.raw.extend(recs);
        }
    }
    Ok(report)
}

impl CgReport {
    pub fn plot(&self) -> Plot {
        let mut keys: Vec<(usize, usize, usize, usize)> = self.raw.iter().map(|r| (r.n, r.m, r.l, r.rep)).collect();
        keys.dedup();
        let series = keys
            .into_iter()
            .map(|(n, m, l, rep)| {
                Series::new(
                    format!("({n},{m}) l={l} rep {rep}"),
                    self.raw
                        .iter()
                        .filter(|r| (r.n, r.m, r.l, r.rep) == (n, m, l, rep))
                        .map(|r| (r.gamma, r.milps as f64))
                        .collect(),
                )
            })
            .collect();
        Plot {
            title: "Constraint generation: separation MILPs per padding level".into(),
            x_label: "padding level gamma".into(),
            y_label: "MILPs solved".into(),
            y2_label: None,
            log_y: false,
            series,
        }
    }

    /// Mean wall-clock per run: total, separation.
    pub fn mean_times(&self, n: usize, m: usize, l: usize) -> (f64, f64) {
        let t: Vec<&CgTiming> = self.timing.iter().filter(|t| (t.n, t.m, t.l) == (n, m, l)).collect();
        let k = t.len().max(1) as f64;
        (t.iter().map(|t| t.total_s).sum::<f64>() / k, t.iter().map(|t| t.separation_s).sum::<f64>() / k)
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
                let (tot, sep) = self.mean_times(r.n, r.m, r.l);
                format!(
                    "({},{}) l={} N={}: soln time {:.1}s  MILP time {:.2}s  MILPs solved {:.2} (max {})  certified {}/{}  reliable {}/{}",
                    r.n, r.m, r.l, r.sample_size, tot, sep, r.milps_mean, r.milps_max, r.certified, r.runs, r.reliable, r.reliable_checked
                )
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }
}
