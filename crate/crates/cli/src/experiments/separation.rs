//! Strength of the two separation MILPs on the factor TRP at an SAA point.

use anyhow::Result;
use log::info;
use serde::{Deserialize, Serialize};

use padded_saa::padded::{separation_milp_fixed_recourse, separation_milp_general, SepOptions, SeparationResult};
use padded_saa::saa::solve_saa;
use padded_saa::sampling::draw_iid_sample;
use padded_saa::trp::{generate_trp, TrpConfig};

use super::{join_vec, ExperimentSpec, Size};
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};
use crate::workers::ordered_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `d x N` binaries, any linear scenario map.
    General,
    /// Box corners, fixed recourse.
    FixedRecourse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationRow {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub formulation: Formulation,
    pub binaries: usize,
    /// `H` rechecked at the decoded mixed scenario.
    pub value: Option<f64>,
    pub milp_value: Option<f64>,
    pub lp_relaxation: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: Option<u64>,
    pub gap_lp: Option<f64>,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationRaw {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub rep: usize,
    pub instance_seed: u64,
    pub train_seed: u64,
    pub saa_objective: f64,
    pub x_hat: String,
    pub j_general: Option<String>,
    pub j_fixed_recourse: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationTiming {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub rep: usize,
    pub formulation: Formulation,
    pub t_ip_s: f64,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub rows: Vec<SeparationRow>,
    pub raw: Vec<SeparationRaw>,
    pub timing: Vec<SeparationTiming>,
}

fn row(size: Size, nn: usize, rep: usize, f: Formulation, r: &SeparationResult) -> SeparationRow {
    SeparationRow {
        n: size.n,
        m: size.m,
        l: size.l,
        sample_size: nn,
        rep,
        formulation: f,
        binaries: r.stats.binaries,
        value: r.j.as_ref().map(|_| r.value),
        milp_value: r.milp_value,
        lp_relaxation: r.stats.lp_relaxation_value,
        gap: r.stats.mip_gap,
        nodes: r.stats.node_count,
        gap_lp: r.stats.lp_gap,
        timed_out: r.stats.timed_out,
    }
}

fn join_j(j: &Option<Vec<usize>>) -> Option<String> {
    j.as_ref().map(|v| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";"))
}

type Instance = (Vec<SeparationRow>, SeparationRaw, Vec<SeparationTiming>);

fn bench_one(spec: &ExperimentSpec, size: Size, nn: usize, rep: usize) -> Result<Instance> {
    let iseed = spec.instance_seed(size, rep);
    let inst = generate_trp(&TrpConfig::factor(size.n, size.m, size.l, iseed))?;
    let tseed = spec.train_seed(size, nn, rep);
    let s = draw_iid_sample(&inst.spec, nn, tseed)?;
    let sol = solve_saa(&inst.problem, &s)?;
    let opts = |f: &str| SepOptions {
        pins: inst.pins.clone(),
        time_limit: Some(spec.time_limit()),
        dump: spec
            .dump_lp
            .as_ref()
            .map(|d| d.join(format!("separation_{f}_{}_{rep}.lp", size.tag()))),
    };
    if let Some(d) = &spec.dump_lp {
        std::fs::create_dir_all(d)?;
    }
    let g = separation_milp_general(&inst.problem, &s, &sol.x, &opts("general"))?;
    let fr = separation_milp_fixed_recourse(&inst.problem, &s, &sol.x, &opts("fixed_recourse"))?;
    info!(
        "({size}) rep {rep}: general gap_lp {:?} nodes {:?} timed out {}; fixed-recourse gap_lp {:?} nodes {:?}",
        g.stats.lp_gap, g.stats.node_count, g.stats.timed_out, fr.stats.lp_gap, fr.stats.node_count
    );
    let rows = vec![
        row(size, nn, rep, Formulation::General, &g),
        row(size, nn, rep, Formulation::FixedRecourse, &fr),
    ];
    let timing = [(Formulation::General, &g), (Formulation::FixedRecourse, &fr)]
        .iter()
        .map(|(f, r)| SeparationTiming {
            n: size.n,
            m: size.m,
            l: size.l,
            rep,
            formulation: *f,
            t_ip_s: r.stats.wall_time_s,
        })
        .collect();
    let raw = SeparationRaw {
        n: size.n,
        m: size.m,
        l: size.l,
        rep,
        instance_seed: iseed,
        train_seed: tseed,
        saa_objective: sol.objective,
        x_hat: join_vec(&sol.x),
        j_general: join_j(&g.j),
        j_fixed_recourse: join_j(&fr.j),
    };
    Ok((rows, raw, timing))
}

pub fn run(spec: &ExperimentSpec) -> Result<SeparationReport> {
    let mut report = SeparationReport {
        rows: vec![],
        raw: vec![],
        timing: vec![],
    };
    for &size in &spec.sizes {
        for &nn in &spec.sample_sizes {
            for res in ordered_map(spec.reps, |r| bench_one(spec, size, nn, r)) {
                let (rows, raw, timing) = res?;
                report.rows.extend(rows);
                report.raw.push(raw);
                report.timing.extend(timing);
            }
        }
    }
    Ok(report)
}

impl SeparationReport {
    pub fn plot(&self) -> Plot {
        let series = [Formulation::General, Formulation::FixedRecourse]
            .iter()
            .map(|&f| {
                Series::new(
                    format!("{f:?} LP gap %"),
                    self.rows
                        .iter()
                        .filter(|r| r.formulation == f)
                        .enumerate()
                        .map(|(i, r)| (i as f64 + 1.0, 100.0 * r.gap_lp.unwrap_or(f64::NAN)))
                        .collect(),
                )
            })
            .collect();
        Plot {
            title: "Separation MILP root relaxation gap per instance".into(),
            x_label: "instance".into(),
            y_label: "LP relaxation gap (%)".into(),
            y2_label: None,
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
        let pct = |v: Option<f64>| v.map_or("n/a".into(), |g| format!("{:.1}%", 100.0 * g));
        Ok(self
            .rows
            .iter()
            .zip(&self.timing)
            .map(|(r, t)| {
                format!(
                    "(m,l)=({},{}) rep {} {:?}: t_IP {:.2}s{}  gap {}  nodes {}  gap_LP {}",
                    r.m,
                    r.l,
                    r.rep,
                    r.formulation,
                    t.t_ip_s,
                    if r.timed_out { " (limit)" } else { "" },
                    pct(r.gap),
                    r.nodes.map_or("n/a".into(), |n| n.to_string()),
                    pct(r.gap_lp)
                )
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }
}
