//! Two-stage resource planning: buy resource capacity `x`, then assign it to
//! random customer demand.
//!
//! Second stage, per scenario `(rho, mu, lambda)`:
//!
//! ```text
//! min  sum_ik q_ik y_ik
//! s.t. sum_k y_ik <= rho_i x_i          (capacity, i in [n])
//!      sum_i mu_ik y_ik >= lambda_k      (demand,   k in [m])
//!      y >= 0
//! ```
//!
//! In the factor variant the demand is `lambda_k = sum_q a_qk tau_q + h_k` and
//! `xi = (rho, mu, tau)` with `tau ~ U[-1, 1]^l`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{eval_h, Evaluator};
use crate::model::{DeterministicSecondStage, LinearScenarioMap, Matrix, PolyhedralSet, TwoStageProblem};
use crate::padded::{separation_milp_fixed_recourse, Direction, SepOptions};
use crate::saa::{package_solution, solve_form, BlockLayout, ExtensiveForm, SaaSolution};
use crate::sampling::{componentwise_extrema, rng_from_seed, stream_seed, DistributionSpec, Marginal, SampleSet};
use crate::solver_backend::{MathProgram, ObjSense, RowSense, FEASIBILITY_TOL};

/// Distribution parameters. The defaults are a reconstruction sized so that
/// the (10, 10) instance has SAA objectives near 118.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrpParams {
    pub c_lo: f64,
    pub c_hi: f64,
    pub rho_mean: f64,
    pub rho_sd: f64,
    /// Means of `mu_ik` are drawn uniformly from `[mu_mean_lo, mu_mean_hi]`.
    pub mu_mean_lo: f64,
    pub mu_mean_hi: f64,
    /// Standard deviation of `mu_ik` relative to its mean.
    pub mu_rel_sd: f64,
    /// Means of the unscaled demand are drawn uniformly from this range.
    pub lambda_mean_lo: f64,
    pub lambda_mean_hi: f64,
    pub lambda_sd: f64,
    /// `q_ik = q0_ik * (q_rho_offset - rho_i)` with `q0_ik ~ U[q0_lo, q0_hi]`.
    pub q0_lo: f64,
    pub q0_hi: f64,
    pub q_rho_offset: f64,
    /// Factor offsets `h_k ~ N(h_mean, h_var)`; loadings `a_qk ~ N(0, 1)`.
    pub h_mean: f64,
    pub h_var: f64,
}

impl Default for TrpParams {
    fn default() -> Self {
        Self {
            c_lo: 1.0,
            c_hi: 2.0,
            rho_mean: 1.0,
            rho_sd: 0.05,
            mu_mean_lo: 0.8,
            mu_mean_hi: 1.2,
            mu_rel_sd: 0.05,
            lambda_mean_lo: 80.0,
            lambda_mean_hi: 110.0,
            lambda_sd: 10.0,
            q0_lo: 0.05,
            q0_hi: 0.15,
            q_rho_offset: 2.0,
            h_mean: 11.0,
            h_var: 6.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrpConfig {
    /// Number of resources.
    pub n: usize,
    /// Number of customer types.
    pub m: usize,
    /// Pure-integer first stage when true.
    #[serde(default)]
    pub integer: bool,
    /// Number of demand factors; 0 selects the monotone base variant.
    #[serde(default)]
    pub l: usize,
    #[serde(default = "default_demand_scale")]
    pub demand_scale: f64,
    pub seed: u64,
    #[serde(default)]
    pub params: TrpParams,
}

fn default_demand_scale() -> f64 {
    0.1
}

impl TrpConfig {
    pub fn base(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            integer: false,
            l: 0,
            demand_scale: default_demand_scale(),
            seed,
            params: TrpParams::default(),
        }
    }

    pub fn factor(n: usize, m: usize, l: usize, seed: u64) -> Self {
        Self { l, ..Self::base(n, m, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidInput("n and m must be at least 1".into()));
        }
        if !(self.demand_scale > 0.0 && self.demand_scale.is_finite()) {
            return Err(Error::InvalidInput("demand_scale must be positive".into()));
        }
        let p = &self.params;
        let ok = p.c_lo <= p.c_hi
            && p.rho_sd > 0.0
            && p.mu_mean_lo <= p.mu_mean_hi
            && p.mu_mean_lo > 0.0
            && p.mu_rel_sd > 0.0
            && p.lambda_mean_lo <= p.lambda_mean_hi
            && p.lambda_sd > 0.0
            && p.q0_lo <= p.q0_hi
            && p.h_var >= 0.0;
        if !ok {
            return Err(Error::InvalidInput("inconsistent TRP distribution parameters".into()));
        }
        Ok(())
    }
}

/// Where each block of `xi` lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrpLayout {
    pub n: usize,
    pub m: usize,
    /// Factor count; 0 means the last block is `lambda`.
    pub l: usize,
}

impl TrpLayout {
    pub fn rho(&self, i: usize) -> usize {
        i
    }

    pub fn mu(&self, i: usize, k: usize) -> usize {
        self.n + i * self.m + k
    }

    /// Demand coordinate (base variant) or factor coordinate (factor variant).
    pub fn tail(&self, t: usize) -> usize {
        self.n + self.n * self.m + t
    }

    pub fn tail_len(&self) -> usize {
        if self.l == 0 {
            self.m
        } else {
            self.l
        }
    }

    pub fn d_dim(&self) -> usize {
        self.n + self.n * self.m + self.tail_len()
    }

    /// Column of `y_ik` in the recourse vector.
    pub fn y(&self, i: usize, k: usize) -> usize {
        i * self.m + k
    }
}

#[derive(Debug, Clone)]
pub struct TrpInstance {
    pub config: TrpConfig,
    pub problem: TwoStageProblem,
    pub layout: TrpLayout,
    pub spec: DistributionSpec,
    /// Monotone directions `(-rho, -mu, +lambda)`; base variant only.
    pub signs: Option<Vec<Direction>>,
    /// Pins for the factor variant: `rho` and `mu` at their minimum, `tau` free.
    pub pins: Vec<Option<Direction>>,
    pub support_lo: Vec<f64>,
    pub support_hi: Vec<f64>,
    pub c: Vec<f64>,
    pub q0: Matrix,
    /// Factor loadings `a` (`l x m`) and offsets `h` (factor variant).
    pub loadings: Option<Matrix>,
    pub offsets: Vec<f64>,
    /// Base-layout problem over `(rho, mu, lambda)`; with [`hardest_scenario`]
    /// it gives a cheap conservative reliability bound for the factor variant.
    /// Equal to `problem` in the base variant.
    demand_view: Option<TwoStageProblem>,
}

enum Demand<'a> {
    Direct,
    Factor { a: &'a Matrix, h: &'a [f64] },
}

fn build_problem(layout: TrpLayout, c: &[f64], q0: &Matrix, q_offset: f64, integer: bool, demand: Demand<'_>) -> Result<TwoStageProblem> {
    let (n, m) = (layout.n, layout.m);
    let d = layout.d_dim();
    let n2 = n * m;
    let mut map = LinearScenarioMap::zeros(n + m, n, n2, d);
    for i in 0..n {
        map.tk[i][(i, layout.rho(i))] = 1.0;
        for k in 0..m {
            let y = layout.y(i, k);
            map.wk[y][(i, d)] = -1.0;
            map.wk[y][(n + k, layout.mu(i, k))] = 1.0;
            map.q_map[(y, d)] = q_offset * q0[(i, k)];
            map.q_map[(y, layout.rho(i))] = -q0[(i, k)];
        }
    }
    match demand {
        Demand::Direct => {
            for k in 0..m {
                map.hbar[(n + k, layout.tail(k))] = 1.0;
            }
        }
        Demand::Factor { a, h } => {
            for k in 0..m {
                for q in 0..layout.l {
                    if a[(q, k)] != 0.0 {
                        map.hbar[(n + k, layout.tail(q))] = a[(q, k)];
                    }
                }
                map.hbar[(n + k, d)] = h[k];
            }
        }
    }
    let mut x_set = PolyhedralSet::nonnegative_orthant(n);
    if integer {
        x_set.integrality = (0..n).collect();
    }
    TwoStageProblem::new(c.to_vec(), x_set, DeterministicSecondStage::nonnegative(n, n2), map, d)
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Builds an instance; all frozen parameters come from `cfg.seed`.
pub fn generate_trp(cfg: &TrpConfig) -> Result<TrpInstance> {
    cfg.validate()?;
    let p = &cfg.params;
    let layout = TrpLayout { n: cfg.n, m: cfg.m, l: cfg.l };
    let (n, m, l) = (cfg.n, cfg.m, cfg.l);
    let mut rng = rng_from_seed(stream_seed(cfg.seed, "trp-params"));

    let c: Vec<f64> = (0..n).map(|_| uniform(&mut rng, p.c_lo, p.c_hi)).collect();
    let mut mu_mean = Matrix::zeros(n, m);
    for i in 0..n {
        for k in 0..m {
            mu_mean[(i, k)] = uniform(&mut rng, p.mu_mean_lo, p.mu_mean_hi);
        }
    }
    let mut q0 = Matrix::zeros(n, m);
    for i in 0..n {
        for k in 0..m {
            q0[(i, k)] = uniform(&mut rng, p.q0_lo, p.q0_hi);
        }
    }
    let lambda_mean: Vec<f64> = (0..m).map(|_| uniform(&mut rng, p.lambda_mean_lo, p.lambda_mean_hi)).collect();

    let mut marginals = Vec::with_capacity(layout.d_dim());
    for _ in 0..n {
        marginals.push(Marginal::NormalTruncated { mean: p.rho_mean, sd: p.rho_sd });
    }
    for i in 0..n {
        for k in 0..m {
            let mean = mu_mean[(i, k)];
            marginals.push(Marginal::NormalTruncated { mean, sd: p.mu_rel_sd * mean });
        }
    }

    let (problem, loadings, offsets, demand_view) = if l == 0 {
        for &mean in &lambda_mean {
            marginals.push(Marginal::NormalTruncated {
                mean: mean * cfg.demand_scale,
                sd: p.lambda_sd * cfg.demand_scale,
            });
        }
        let prob = build_problem(layout, &c, &q0, p.q_rho_offset, cfg.integer, Demand::Direct)?;
        (prob, None, Vec::new(), None)
    } else {
        let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
        let h_dist = Normal::new(p.h_mean, p.h_var.sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let h: Vec<f64> = (0..m).map(|_| h_dist.sample(&mut rng)).collect();
        let mut a = Matrix::zeros(l, m);
        for q in 0..l {
            for k in 0..m {
                a[(q, k)] = std_normal.sample(&mut rng);
            }
        }
        for _ in 0..l {
            marginals.push(Marginal::Uniform { lo: -1.0, hi: 1.0 });
        }
        let prob = build_problem(layout, &c, &q0, p.q_rho_offset, cfg.integer, Demand::Factor { a: &a, h: &h })?;
        let view_layout = TrpLayout { l: 0, ..layout };
        let view = build_problem(view_layout, &c, &q0, p.q_rho_offset, cfg.integer, Demand::Direct)?;
        (prob, Some(a), h, Some(view))
    };

    let spec = DistributionSpec::new(marginals);
    spec.validate()?;
    let (support_lo, support_hi) = spec.support_box();
    let monotone_signs = || {
        let mut s = vec![Direction::Decreasing; n + n * m];
        s.extend(std::iter::repeat(Direction::Increasing).take(m));
        s
    };
    let (signs, pins) = if l == 0 {
        let s = monotone_signs();
        let pins = s.iter().copied().map(Some).collect();
        (Some(s), pins)
    } else {
        let mut pins = vec![Some(Direction::Decreasing); n + n * m];
        pins.extend(std::iter::repeat(None).take(l));
        (None, pins)
    };

    Ok(TrpInstance {
        config: cfg.clone(),
        problem,
        layout,
        spec,
        signs,
        pins,
        support_lo,
        support_hi,
        c,
        q0,
        loadings,
        offsets,
        demand_view,
    })
}

impl TrpInstance {
    pub fn is_factor(&self) -> bool {
        self.layout.l > 0
    }

    /// Problem over `(rho, mu, lambda)` in which [`hardest_scenario`] lives.
    pub fn reliability_problem(&self) -> &TwoStageProblem {
        self.demand_view.as_ref().unwrap_or(&self.problem)
    }

    /// Parameter block for sidecar metadata.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "variant": if self.is_factor() { "factor" } else { "base" },
            "config": self.config,
            "layout": self.layout,
            "c": self.c,
            "q0": self.q0,
            "loadings": self.loadings,
            "offsets": self.offsets,
            "distribution": self.spec,
            "signs": self.signs,
            "pins": self.pins,
        })
    }
}

/// Hardest scenario `(rho_inf, mu_inf, lambda_sup)` in the `(rho, mu, lambda)`
/// layout. For the factor variant each `lambda_k` takes its own supremum
/// `sum_q max(a_qk lo_q, a_qk hi_q) + h_k`, which the factors cannot reach
/// jointly, so the scenario is an upper bound there.
pub fn hardest_scenario(inst: &TrpInstance) -> Result<Vec<f64>> {
    if inst.support_lo.iter().chain(&inst.support_hi).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("hardest scenario needs a bounded support".into()));
    }
    let lay = inst.layout;
    let nm = lay.n + lay.n * lay.m;
    let mut xi: Vec<f64> = inst.support_lo[..nm].to_vec();
    match &inst.loadings {
        None => xi.extend_from_slice(&inst.support_hi[nm..]),
        Some(a) => {
            for k in 0..lay.m {
                let mut sup = inst.offsets[k];
                for q in 0..lay.l {
                    let (lo, hi) = (inst.support_lo[lay.tail(q)], inst.support_hi[lay.tail(q)]);
                    sup += (a[(q, k)] * lo).max(a[(q, k)] * hi);
                }
                xi.push(sup);
            }
        }
    }
    Ok(xi)
}

/// Largest factor count whose `2^l` box corners are enumerated directly.
const CORNER_ENUMERATION_MAX_L: usize = 12;

/// `sup H(x, xi)` over the support box.
///
/// Base variant: `H` at the hardest scenario. Factor variant: `rho` and `mu`
/// sit at their minimum (monotone directions) and, with `mu` fixed, `H` is
/// convex in `tau`, so the supremum is attained at a corner of `[-1, 1]^l`.
/// Corners are enumerated for small `l`; otherwise the box-corner separation
/// MILP runs on the two-point sample `{lo, hi}`.
pub fn worst_case_slack(inst: &TrpInstance, x: &[f64]) -> Result<f64> {
    if !inst.is_factor() {
        return eval_h(&inst.problem, x, &hardest_scenario(inst)?);
    }
    let lay = inst.layout;
    let (lo, hi) = (&inst.support_lo, &inst.support_hi);
    if lay.l > CORNER_ENUMERATION_MAX_L {
        let s = SampleSet::from_rows(vec![lo.clone(), hi.clone()])?;
        let opts = SepOptions {
            pins: inst.pins.clone(),
            ..SepOptions::default()
        };
        let r = separation_milp_fixed_recourse(&inst.problem, &s, x, &opts)?;
        return r
            .milp_value
            .ok_or_else(|| Error::Solver("box-corner MILP returned no value".into()));
    }
    let mut ev = Evaluator::new(&inst.problem);
    let mut xi = lo.clone();
    let mut worst = f64::NEG_INFINITY;
    for mask in 0u32..(1 << lay.l) {
        for t in 0..lay.l {
            let q = lay.tail(t);
            xi[q] = if mask >> t & 1 == 1 { hi[q] } else { lo[q] };
        }
        worst = worst.max(ev.h(x, &xi)?);
    }
    Ok(worst)
}

/// True when `x` admits a recourse action in every scenario of the support.
pub fn is_completely_reliable(inst: &TrpInstance, x: &[f64]) -> Result<bool> {
    Ok(worst_case_slack(inst, x)? <= FEASIBILITY_TOL)
}

/// The padded TRP LP: the SAA extensive form plus one `z` block with
/// `sum_k z_ik <= rho_min_i x_i - gamma` and
/// `sum_i mu_min_ik z_ik >= lambda_max_k + gamma`.
pub fn build_trp_padded(inst: &TrpInstance, s: &SampleSet, gamma: f64) -> Result<ExtensiveForm> {
    if inst.is_factor() {
        return Err(Error::ModeNotApplicable(
            "the factor variant is not monotone; use constraint generation".into(),
        ));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput("gamma must be finite and nonnegative".into()));
    }
    let lay = inst.layout;
    if s.dim() != lay.d_dim() {
        return Err(Error::Dimension(format!("sample dimension {} != {}", s.dim(), lay.d_dim())));
    }
    let (n, m) = (lay.n, lay.m);
    let (lo, hi) = componentwise_extrema(s)?;
    let scen_w = 1.0 / s.len() as f64;
    let mut lp = MathProgram::new(ObjSense::Minimize);
    for i in 0..n {
        let col = lp.add_col(0.0, f64::INFINITY, inst.c[i]);
        if inst.config.integer {
            lp.set_integer(col, true);
        }
    }
    let offset = inst.config.params.q_rho_offset;
    let block = |lp: &mut MathProgram, rho: &dyn Fn(usize) -> f64, mu: &dyn Fn(usize, usize) -> f64, lam: &dyn Fn(usize) -> f64, cost: &dyn Fn(usize, usize) -> f64, pad: f64| {
        let y0 = lp.num_cols();
        for i in 0..n {
            for k in 0..m {
                lp.add_col(0.0, f64::INFINITY, cost(i, k));
            }
        }
        let row0 = lp.num_rows();
        for i in 0..n {
            let entries = (0..m).map(|k| (y0 + lay.y(i, k), -1.0)).chain([(i, rho(i))]);
            lp.add_row(entries, RowSense::Ge, pad);
        }
        for k in 0..m {
            let entries = (0..n).map(|i| (y0 + lay.y(i, k), mu(i, k)));
            lp.add_row(entries, RowSense::Ge, lam(k) + pad);
        }
        BlockLayout { y0, row0, random_rows: n + m }
    };
    let mut scenario_blocks = Vec::with_capacity(s.len());
    for xi in &s.rows {
        let b = block(
            &mut lp,
            &|i| xi[lay.rho(i)],
            &|i, k| xi[lay.mu(i, k)],
            &|k| xi[lay.tail(k)],
            &|i, k| scen_w * inst.q0[(i, k)] * (offset - xi[lay.rho(i)]),
            0.0,
        );
        scenario_blocks.push(b);
    }
    let z = block(
        &mut lp,
        &|i| lo[lay.rho(i)],
        &|i, k| lo[lay.mu(i, k)],
        &|k| hi[lay.tail(k)],
        &|_, _| 0.0,
        gamma,
    );
    Ok(ExtensiveForm {
        program: lp,
        n1: n,
        n2: n * m,
        scenario_blocks,
        extra_blocks: vec![z],
    })
}

/// Solves the padded TRP LP and evaluates the solution on the sample.
pub fn solve_trp_padded(inst: &TrpInstance, s: &SampleSet, gamma: f64) -> Result<SaaSolution> {
    let ef = build_trp_padded(inst, s, gamma)?;
    let r = solve_form(&ef).map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible(format!("padded TRP infeasible at gamma = {gamma}")),
        other => other,
    })?;
    let x = ef.x_of(r.primal.as_deref().expect("optimal result has a primal"));
    package_solution(&inst.problem, s, x, &r, &mut Evaluator::new(&inst.problem))
}
