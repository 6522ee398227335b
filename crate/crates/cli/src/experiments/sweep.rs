//! Padding sweep on the base TRP: padded objective and fraction of completely
//! reliable solutions as functions of the padding level.

use std::time::Instant;

use anyhow::{anyhow, Result};
use log::info;
use serde::{Deserialize, Serialize};

use padded_saa::feasibility::Evaluator;
use padded_saa::padded::{dominating_scenario, PaddedMaster};
use padded_saa::sampling::draw_iid_sample;
use padded_saa::trp::{generate_trp, is_completely_reliable, TrpConfig, TrpInstance};
use padded_saa::Error;

use super::ExperimentSpec;
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};
use crate::stats::Summary;
use crate::workers::ordered_map;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub gamma: f64,
    pub obj_mean: f64,
    pub obj_ci: f64,
    pub obj_min: f64,
    pub obj_max: f64,
    /// Completely reliable solutions over all replications.
    pub frac_reliable: f64,
    pub solved: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub saa_obj_mean: f64,
    /// Smallest padding level at which every replication is completely reliable.
    pub gamma_star: Option<f64>,
    /// Cheapest completely reliable padded solution over all levels and replications.
    pub cheapest_reliable: Option<f64>,
    /// `cheapest_reliable / saa_obj_mean - 1`.
    pub premium: Option<f64>,
}

/// One solve: `gamma = None` is the standard SAA problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub gamma: Option<f64>,
    pub status: String,
    pub objective: Option<f64>,
    pub program_objective: Option<f64>,
    pub reliable: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTiming {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub saa_s: f64,
    pub padded_s: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
    pub raw: Vec<SweepRecord>,
    pub timing: Vec<SweepTiming>,
}

impl SweepReport {
    /// Padded records of one replication in grid order.
    pub fn replication(&self, sample_size: usize, rep: usize) -> Vec<&SweepRecord> {
        self.raw
            .iter()
            .filter(|r| r.sample_size == sample_size && r.rep == rep && r.gamma.is_some())
            .collect()
    }
}

/// Standard SAA followed by the padded problem at every level, all in one
/// warm-started session.
fn sweep_one(
    inst: &TrpInstance,
    spec: &ExperimentSpec,
    sample_size: usize,
    rep: usize,
) -> Result<(Vec<SweepRecord>, SweepTiming)> {
    let (n, m) = (inst.layout.n, inst.layout.m);
    let rec = |gamma, status: String, obj: Option<f64>, prog: Option<f64>, reliable| SweepRecord {
        n,
        m,
        sample_size,
        rep,
        gamma,
        status,
        objective: obj,
        program_objective: prog,
        reliable,
    };
    let size = super::Size::new(n, m, 0);
    let s = draw_iid_sample(&inst.spec, sample_size, spec.train_seed(size, sample_size, rep))?;
    let signs = inst.signs.as_ref().ok_or_else(|| anyhow!("padding sweep needs the base TRP"))?;
    let mut ev = Evaluator::new(&inst.problem);
    let t0 = Instant::now();
    let mut master = PaddedMaster::new(&inst.problem, &s, spec.gammas[0])?;
    let saa = master.solution(&mut ev)?;
    let saa_s = t0.elapsed().as_secs_f64();
    let mut out = vec![rec(
        None,
        "ok".into(),
        Some(saa.objective),
        Some(saa.program_objective),
        Some(is_completely_reliable(inst, &saa.x)?),
    )];
    let t1 = Instant::now();
    master.add_scenario(&dominating_scenario(&s, signs)?)?;
    for &g in &spec.gammas {
        master.set_gamma(g)?;
        match master.solution(&mut ev) {
            Ok(sol) => {
                let reliable = is_completely_reliable(inst, &sol.x)?;
                out.push(rec(Some(g), "ok".into(), Some(sol.objective), Some(sol.program_objective), Some(reliable)));
            }
            Err(Error::Infeasible(_)) => out.push(rec(Some(g), "infeasible".into(), None, None, None)),
            Err(e) => return Err(e.into()),
        }
    }
    let timing = SweepTiming {
        n,
        m,
        sample_size,
        rep,
        saa_s,
        padded_s: t1.elapsed().as_secs_f64(),
    };
    Ok((out, timing))
}

pub fn run(spec: &ExperimentSpec) -> Result<SweepReport> {
    let mut report = SweepReport {
        rows: vec![],
        summary: vec![],
        raw: vec![],
        timing: vec![],
    };
    for &size in &spec.sizes {
        let inst = generate_trp(&TrpConfig::base(size.n, size.m, spec.instance_seed(size, 0)))?;
        for &nn in &spec.sample_sizes {
            let results = ordered_map(spec.reps, |r| sweep_one(&inst, spec, nn, r));
            let mut recs = Vec::new();
            for r in results {
                let (rr, t) = r?;
                recs.extend(rr);
                report.timing.push(t);
            }
            let saa: Vec<f64> = recs.iter().filter(|r| r.gamma.is_none()).filter_map(|r| r.objective).collect();
            let saa_mean = Summary::of(&saa).map_or(f64::NAN, |s| s.mean);
            let mut gamma_star = None;
            let mut cheapest: Option<f64> = None;
            for &g in &spec.gammas {
                let at: Vec<&SweepRecord> = recs.iter().filter(|r| r.gamma == Some(g)).collect();
                let objs: Vec<f64> = at.iter().filter_map(|r| r.objective).collect();
                let reliable = at.iter().filter(|r| r.reliable == Some(true)).count();
                let o = Summary::of(&objs).unwrap_or_else(Summary::empty);
                let frac = reliable as f64 / spec.reps as f64;
                if frac == 1.0 && gamma_star.is_none() {
                    gamma_star = Some(g);
                }
                for r in at.iter().filter(|r| r.reliable == Some(true)) {
                    let v = r.objective.expect("reliable records carry an objective");
                    cheapest = Some(cheapest.map_or(v, |c| c.min(v)));
                }
                report.rows.push(SweepRow {
                    n: size.n,
                    m: size.m,
                    sample_size: nn,
                    gamma: g,
                    obj_mean: o.mean,
                    obj_ci: o.ci,
                    obj_min: o.min,
                    obj_max: o.max,
                    frac_reliable: frac,
                    solved: objs.len(),
                    infeasible: at.iter().filter(|r| r.status == "infeasible").count(),
                });
            }
            let premium = cheapest.map(|c| c / saa_mean - 1.0);
            info!(
                "({size}, N={nn}): SAA mean {saa_mean:.2}, gamma* {gamma_star:?}, cheapest reliable {cheapest:?}, premium {premium:?}"
            );
            report.summary.push(SweepSummary {
                n: size.n,
                m: size.m,
                sample_size: nn,
                saa_obj_mean: saa_mean,
                gamma_star,
                cheapest_reliable: cheapest,
                premium,
            });
            report.raw.extend(recs);
        }
    }
    Ok(report)
}

impl SweepReport {
    pub fn plot(&self) -> Plot {
        let mut series = Vec::new();
        let mut keys: Vec<(usize, usize, usize)> = self.rows.iter().map(|r| (r.n, r.m, r.sample_size)).collect();
        keys.dedup();
        for (n, m, nn) in keys {
            let rows: Vec<&SweepRow> = self.rows.iter().filter(|r| (r.n, r.m, r.sample_size) == (n, m, nn)).collect();
            series.push(Series::new(
                format!("N={nn} average objective"),
                rows.iter().map(|r| (r.gamma, r.obj_mean)).collect(),
            ));
            series.push(
                Series::new(
                    format!("N={nn} fraction reliable"),
                    rows.iter().map(|r| (r.gamma, r.frac_reliable)).collect(),
                )
                .on_secondary()
                .dashed(),
            );
        }
        let title = match self.rows.first() {
            Some(r) => format!("Padded SAA on TRP ({},{})", r.n, r.m),
            None => "Padded SAA".into(),
        };
        Plot {
            title,
            x_label: "padding level gamma".into(),
            y_label: "average objective".into(),
            y2_label: Some("fraction completely reliable".into()),
            log_y: false,
            series,
        }
    }

    pub fn write(&self, mut w: ArtifactWriter, config: &serde_json::Value) -> Result<String> {
        w.csv(".csv", &self.rows)?;
        w.csv("_summary.csv", &self.summary)?;
        w.csv("_raw.csv", &self.raw)?;
        w.csv("_timing.csv", &self.timing)?;
        w.text(".svg", &self.plot().to_svg())?;
        w.manifest(config)?;
        let mut lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "({},{},{:>4}) gamma {:.2}  obj {:8.2} +- {:5.2}  reliable {:.2}  infeasible {}",
                    r.n, r.m, r.sample_size, r.gamma, r.obj_mean, r.obj_ci, r.frac_reliable, r.infeasible
                )
            })
            .collect();
        for s in &self.summary {
            lines.push(format!(
                "({},{},{:>4}) SAA mean {:.2}; gamma* {:?}; cheapest reliable {:?}; premium {}",
                s.n,
                s.m,
                s.sample_size,
                s.saa_obj_mean,
                s.gamma_star,
                s.cheapest_reliable,
                s.premium.map_or("n/a".into(), |p| format!("{:.1}%", 100.0 * p))
            ));
        }
        Ok(lines.join("\n"))
    }
}
