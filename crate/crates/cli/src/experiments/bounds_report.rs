//! Sample-size bounds evaluated at TRP dimensions and a grid of tolerances.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use padded_saa::bounds::*;
use padded_saa::trp::{generate_trp, TrpConfig};

use super::{ExperimentSpec, Size};
use crate::output::ArtifactWriter;
use crate::plot::{Plot, Series};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRow {
    pub calculator: String,
    pub n: usize,
    pub m: usize,
    pub eps: Option<f64>,
    pub beta: Option<f64>,
    pub sample_size: Option<u64>,
    /// Other inputs as compact JSON.
    pub inputs: String,
    /// Real-valued expression (a log-probability for `feasibility_failure_log`).
    pub value: f64,
    /// Ceiling of `value` where the calculator returns a sample size.
    pub required: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub rows: Vec<BoundRow>,
}

pub const EPS_GRID: [f64; 4] = [0.05, 0.01, 0.005, 0.001];
pub const BETA_GRID: [f64; 2] = [0.05, 0.01];

/// `(n1, n2, m1, m2)` of the TRP extensive form: `x >= 0`, `n m` flows,
/// `n + m` random rows and `n m` sign rows.
pub fn trp_dims(size: Size) -> (u64, u64, u64, u64) {
    let (n, m) = (size.n as u64, size.m as u64);
    (n, n * m, n, n + m + n * m)
}

pub fn run(spec: &ExperimentSpec) -> Result<BoundsReport> {
    let mut rows = Vec::new();
    let row = |calc: &str, size: Size, eps, beta, nn, inputs: serde_json::Value, value, required| BoundRow {
        calculator: calc.into(),
        n: size.n,
        m: size.m,
        eps,
        beta,
        sample_size: nn,
        inputs: inputs.to_string(),
        value,
        required,
    };
    for &size in &spec.sizes {
        let (n1, n2, m1, m2) = trp_dims(size);
        let dims = serde_json::json!({"n1": n1, "n2": n2, "m1": m1, "m2": m2});
        for eps in EPS_GRID {
            for beta in BETA_GRID {
                let inp = LpBoundInputs { eps, beta, n1, n2, m1, m2 };
                rows.push(row(
                    "two_stage_lp",
                    size,
                    Some(eps),
                    Some(beta),
                    None,
                    dims.clone(),
                    sample_size_two_stage_lp_real(&inp)?,
                    Some(sample_size_two_stage_lp(&inp)?),
                ));
            }
            for &nn in &spec.sample_sizes {
                rows.push(row(
                    "feasibility_failure_log",
                    size,
                    Some(eps),
                    None,
                    Some(nn as u64),
                    dims.clone(),
                    feasibility_failure_log(nn as u64, eps, n1, n2, m1, m2)?,
                    None,
                ));
            }
        }
        rows.push(row(
            "basic_solution_count_ln",
            size,
            None,
            None,
            None,
            dims.clone(),
            basic_solution_count_bound(n1, n2, m1, m2)?.ln(),
            None,
        ));
        // Padding bounds with the TRP support diameter and a unit Lipschitz constant.
        let inst = generate_trp(&TrpConfig::base(size.n, size.m, spec.instance_seed(size, 0)))?;
        let diameter = inst
            .support_lo
            .iter()
            .zip(&inst.support_hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max);
        let d = inst.layout.d_dim() as u64;
        for gamma in [0.5, 1.0, 2.0] {
            for beta in BETA_GRID {
                let eta = 0.01;
                let inp = PaddingBoundInputs::ProductMarginal {
                    d,
                    diameter,
                    lipschitz: 1.0,
                    gamma,
                    eta,
                    beta,
                };
                rows.push(row(
                    "padded_product_marginal",
                    size,
                    None,
                    Some(beta),
                    None,
                    serde_json::to_value(inp)?,
                    sample_size_padded_real(&inp)?,
                    Some(sample_size_padded(&inp)?),
                ));
            }
        }
        for eta_tilde in [0.05, 0.01] {
            for eps in [0.05, 0.01] {
                let inp = PaddingBoundInputs::RhsOnly { n2, m2, eta_tilde, eps };
                rows.push(row(
                    "padded_rhs_only",
                    size,
                    Some(eps),
                    None,
                    None,
                    serde_json::to_value(inp)?,
                    sample_size_padded_real(&inp)?,
                    Some(sample_size_padded(&inp)?),
                ));
            }
        }
        for gamma_tilde in [0.1, 0.01] {
            for beta in BETA_GRID {
                // Integer capacities in {0, ..., 20}^n.
                let excluded = 21u64.saturating_pow(size.n as u32);
                let inp = FiniteXBoundInputs {
                    rate: FiniteXRate::Direct { gamma_tilde },
                    excluded_count: excluded,
                    beta,
                };
                rows.push(row(
                    "finite_x",
                    size,
                    None,
                    Some(beta),
                    None,
                    serde_json::json!({"gamma_tilde": gamma_tilde, "excluded_count": excluded}),
                    sample_size_finite_x_real(&inp)?,
                    Some(sample_size_finite_x(&inp)?),
                ));
            }
        }
    }
    Ok(BoundsReport { rows })
}

impl BoundsReport {
    pub fn plot(&self) -> Plot {
        let mut series = Vec::new();
        let mut keys: Vec<(usize, usize)> = self.rows.iter().map(|r| (r.n, r.m)).collect();
        keys.dedup();
        for (n, m) in keys {
            for beta in BETA_GRID {
                series.push(Series::new(
                    format!("({n},{m}) beta={beta}"),
                    self.rows
                        .iter()
                        .filter(|r| r.calculator == "two_stage_lp" && (r.n, r.m) == (n, m) && r.beta == Some(beta))
                        .map(|r| (r.eps.unwrap_or(f64::NAN).log10(), r.value))
                        .collect(),
                ));
            }
        }
        Plot {
            title: "Sample size for recourse likelihood 1 - eps (two-stage LP bound)".into(),
            x_label: "log10 eps".into(),
            y_label: "required N".into(),
            y2_label: None,
            log_y: true,
            series,
        }
    }

    pub fn write(&self, mut w: ArtifactWriter, config: &serde_json::Value) -> Result<String> {
        w.csv(".csv", &self.rows)?;
        w.text(".svg", &self.plot().to_svg())?;
        w.manifest(config)?;
        Ok(self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{:<26} ({},{}) eps {:<6} beta {:<5} N {:<5} -> {}",
                    r.calculator,
                    r.n,
                    r.m,
                    r.eps.map_or("-".into(), |v| v.to_string()),
                    r.beta.map_or("-".into(), |v| v.to_string()),
                    r.sample_size.map_or("-".into(), |v| v.to_string()),
                    r.required.map_or(format!("{:.6}", r.value), |v| v.to_string())
                )
            })
            .collect::<Vec<_>>()
            .join("\n"))
    }
}
