//! Finite-support example where SAA needs the rarest atom in its sample:
//! `X = [0, 2]`, `n xi ~ Binomial(n, 1/2)`, `F(x, xi) = x` if `x >= xi`, else
//! `+inf`. The SAA solution is the sample maximum and `f(x_N) = +inf` exactly
//! when no draw hits `xi = 1`, with probability `(1 - 2^-n)^N`.

use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use padded_saa::feasibility::eval_h;
use padded_saa::model::{DeterministicSecondStage, LinearScenarioMap, Matrix, PolyhedralSet, TwoStageProblem};
use padded_saa::saa::solve_saa;
use padded_saa::sampling::{draw_iid_sample, replication_seed, stream_seed, DistributionSpec, Marginal};
use padded_saa::solver_backend::FEASIBILITY_TOL;

use super::ExperimentSpec;
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};
use crate::workers::ordered_map;

/// `min E F(x, xi)` over `X = [0, 2]` with the random row `0 y >= xi - x`
/// and the deterministic row `y >= x` at unit cost.
pub fn threshold_problem() -> TwoStageProblem {
    let mut map = LinearScenarioMap::zeros(1, 1, 1, 1);
    map.tk[0][(0, 1)] = 1.0;
    map.hbar[(0, 0)] = 1.0;
    map.q_map[(0, 1)] = 1.0;
    let x_set = PolyhedralSet {
        a: Matrix::from_rows(&[vec![1.0], vec![-1.0]]).expect("2x1"),
        b: vec![2.0, 0.0],
        integrality: vec![],
    };
    let det = DeterministicSecondStage {
        dmat: Matrix::from_rows(&[vec![1.0]]).expect("1x1"),
        cmat: Matrix::from_rows(&[vec![-1.0]]).expect("1x1"),
        d: vec![0.0],
    };
    TwoStageProblem::new(vec![0.0], x_set, det, map, 1).expect("valid threshold problem")
}

pub fn binomial_spec(bits: usize) -> DistributionSpec {
    DistributionSpec::new(vec![Marginal::ScaledBinomial {
        n_trials: bits as u64,
        p: 0.5,
        scale: 1.0 / bits as f64,
    }])
}

pub fn theoretical_frequency(bits: usize, sample_size: usize) -> f64 {
    (1.0 - 0.5f64.powi(bits as i32)).powi(sample_size as i32)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub bits: usize,
    pub sample_size: usize,
    pub reps: usize,
    pub infinite: usize,
    pub empirical: f64,
    pub theoretical: f64,
    pub std_error: f64,
    /// `(empirical - theoretical) / std_error`.
    pub z: f64,
    /// Replications whose SAA solution equals the sample maximum.
    pub x_is_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub bits: usize,
    pub sample_size: usize,
    pub rep: usize,
    pub seed: u64,
    pub x_hat: f64,
    pub max_xi: f64,
    pub infinite: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleTiming {
    pub bits: usize,
    pub sample_size: usize,
    pub total_s: f64,
}

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub rows: Vec<CounterexampleRow>,
    pub raw: Vec<CounterexampleRecord>,
    pub timing: Vec<CounterexampleTiming>,
}

pub fn run(spec: &ExperimentSpec) -> Result<CounterexampleReport> {
    let p = threshold_problem();
    let mut report = CounterexampleReport {
        rows: vec![],
        raw: vec![],
        timing: vec![],
    };
    for &bits in &spec.bits {
        let dist = binomial_spec(bits);
        for &nn in &spec.sample_sizes {
            let t0 = Instant::now();
            let base = stream_seed(spec.seed, &format!("counterexample-{bits}-{nn}"));
            let recs = ordered_map(spec.reps, |r| -> Result<CounterexampleRecord> {
                let seed = replication_seed(base, r as u64);
                let s = draw_iid_sample(&dist, nn, seed)?;
                let sol = solve_saa(&p, &s)?;
                let max_xi = s.rows.iter().map(|row| row[0]).fold(f64::NEG_INFINITY, f64::max);
                // `f(x) = +inf` iff the top atom `xi = 1` is infeasible at `x`.
                let infinite = eval_h(&p, &sol.x, &[1.0])? > FEASIBILITY_TOL;
                Ok(CounterexampleRecord {
                    bits,
                    sample_size: nn,
                    rep: r,
                    seed,
                    x_hat: sol.x[0],
                    max_xi,
                    infinite,
                })
            });
            let recs: Vec<CounterexampleRecord> = recs.into_iter().collect::<Result<_>>()?;
            let infinite = recs.iter().filter(|r| r.infinite).count();
            let reps = recs.len();
            let th = theoretical_frequency(bits, nn);
            let se = (th * (1.0 - th) / reps as f64).sqrt();
            let emp = infinite as f64 / reps as f64;
            report.rows.push(CounterexampleRow {
                bits,
                sample_size: nn,
                reps,
                infinite,
                empirical: emp,
                theoretical: th,
                std_error: se,
                z: if se > 0.0 { (emp - th) / se } else { 0.0 },
                x_is_max: recs.iter().filter(|r| (r.x_hat - r.max_xi).abs() <= 1e-7).count(),
            });
            report.timing.push(CounterexampleTiming {
                bits,
                sample_size: nn,
                total_s: t0.elapsed().as_secs_f64(),
            });
            report.raw.extend(recs);
        }
    }
    Ok(report)
}

impl CounterexampleReport {
    pub fn plot(&self) -> Plot {
        let mut bits: Vec<usize> = self.rows.iter().map(|r| r.bits).collect();
        bits.dedup();
        let mut series = Vec::new();
        for b in bits {
            let rows: Vec<&CounterexampleRow> = self.rows.iter().filter(|r| r.bits == b).collect();
            series.push(Series::new(
                format!("n={b} empirical"),
                rows.iter().map(|r| (r.sample_size as f64, r.empirical)).collect(),
            ));
            series.push(
                Series::new(
                    format!("n={b} (1 - 2^-n)^N"),
                    rows.iter().map(|r| (r.sample_size as f64, r.theoretical)).collect(),
                )
                .dashed(),
            );
        }
        Plot {
            title: "Frequency of an SAA solution with infinite true objective".into(),
            x_label: "sample size N".into(),
            y_label: "P(f(x_N) = +inf)".into(),
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
        Ok(self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "n={} N={:>4}: empirical {:.4}  theory {:.4}  z {:+.2}  x = max xi in {}/{}",
                    r.bits, r.sample_size, r.empirical, r.theoretical, r.z, r.x_is_max, r.reps
                )
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }
}
