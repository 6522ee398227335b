//! The feasibility function `H(x, xi)`, the recourse value `Q(x, xi)` and
//! Monte Carlo recourse-likelihood estimates.
//!
//! `H(x, xi) = min { eta : eta e + W(xi) y >= h(xi) - T(xi) x, D y >= d - C x }`.
//! The recourse problem is feasible iff `H <= FEASIBILITY_TOL`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Block, ScenarioRealization, ScenarioSource, TwoStageProblem};
use crate::sampling::{rng_from_seed, DistributionSpec};
use crate::solver_backend::{
    solve_lp, HighsSession, MathProgram, ObjSense, RowSense, SolveResult, SolveStatus, FEASIBILITY_TOL,
};

/// Second-stage value with an explicit `+inf` variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RecourseValue {
    Finite(f64),
    Infinite,
}

impl RecourseValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, RecourseValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            RecourseValue::Finite(v) => Some(v),
            RecourseValue::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecourseEval {
    pub h_value: f64,
    pub q_value: RecourseValue,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Minimize the uniform slack `eta`.
    Slack,
    /// Minimize `q(xi)^T y` with the random rows relaxed by a given amount.
    Cost,
}

/// Deterministic rows with a single nonzero are passed to the LP as column
/// bounds; everything else stays a row.
struct DetSplit {
    bound_rows: Vec<(usize, usize, f64)>,
    general_rows: Vec<usize>,
}

fn split_det(p: &TwoStageProblem) -> DetSplit {
    let mut bound_rows = Vec::new();
    let mut general_rows = Vec::new();
    for i in 0..p.det.rows() {
        let nz: Vec<(usize, f64)> = p
            .det
            .dmat
            .row(i)
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        match nz.as_slice() {
            [(k, v)] => bound_rows.push((i, *k, *v)),
            _ => general_rows.push(i),
        }
    }
    DetSplit { bound_rows, general_rows }
}

/// Column bounds on `y` implied by single-entry deterministic rows, or `None`
/// when two of them contradict each other or a zero row is violated.
fn y_bounds(p: &TwoStageProblem, split: &DetSplit, det_rhs: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut lo = vec![f64::NEG_INFINITY; p.n2];
    let mut hi = vec![f64::INFINITY; p.n2];
    for &(i, k, v) in &split.bound_rows {
        let b = det_rhs[i] / v;
        if v > 0.0 {
            lo[k] = lo[k].max(b);
        } else {
            hi[k] = hi[k].min(b);
        }
    }
    for k in 0..p.n2 {
        if lo[k] > hi[k] + FEASIBILITY_TOL {
            return None;
        }
        if lo[k] > hi[k] {
            let m = 0.5 * (lo[k] + hi[k]);
            lo[k] = m;
            hi[k] = m;
        }
    }
    for &i in &split.general_rows {
        if p.det.dmat.row(i).iter().all(|&v| v == 0.0) && det_rhs[i] > FEASIBILITY_TOL {
            return None;
        }
    }
    Some((lo, hi))
}

/// Builds the slack or cost LP for one realization from scratch.
fn build_lp(
    p: &TwoStageProblem,
    split: &DetSplit,
    s: &ScenarioRealization,
    x: &[f64],
    mode: Mode,
    relax: f64,
) -> Option<MathProgram> {
    let det_rhs = p.det.rhs(x);
    let (lo, hi) = y_bounds(p, split, &det_rhs)?;
    let mut lp = MathProgram::new(ObjSense::Minimize);
    let eta = (mode == Mode::Slack).then(|| lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 1.0));
    let y0 = lp.num_cols();
    for k in 0..p.n2 {
        let cost = if mode == Mode::Cost { s.q[k] } else { 0.0 };
        lp.add_col(lo[k], hi[k], cost);
    }
    let rhs = s.rhs(x);
    for (pr, r) in rhs.iter().enumerate() {
        let entries = (0..p.n2).map(|k| (y0 + k, s.wbar[(pr, k)])).chain(eta.map(|e| (e, 1.0)));
        lp.add_row(entries, RowSense::Ge, r - relax);
    }
    for &i in &split.general_rows {
        lp.add_row((0..p.n2).map(|k| (y0 + k, p.det.dmat[(i, k)])), RowSense::Ge, det_rhs[i]);
    }
    Some(lp)
}

/// A warm HiGHS session over the recourse LP of a problem with a linear
/// scenario map. Only the scenario-dependent coefficients, rhs values and
/// costs are rewritten between calls.
struct WarmLp {
    session: HighsSession,
    mode: Mode,
    y0: usize,
    /// `(row, col)` positions of W whose value depends on xi.
    varying_w: Vec<(usize, usize)>,
    varying_q: Vec<usize>,
    last_x: Option<Vec<f64>>,
    last_relax: f64,
    det_rhs: Vec<f64>,
}

impl WarmLp {
    fn new(p: &TwoStageProblem, split: &DetSplit, mode: Mode) -> Result<Self> {
        let map = p.compiled_map().expect("linear map");
        let constant = map.d_dim;
        let mut varying_w = Vec::new();
        let mut varying_q = Vec::new();
        let mut w_support = std::collections::BTreeSet::new();
        for t in &map.terms {
            match t.block {
                Block::W => {
                    w_support.insert((t.row, t.col));
                    if t.coord != constant {
                        varying_w.push((t.row, t.col));
                    }
                }
                Block::Q if t.coord != constant => varying_q.push(t.col),
                _ => {}
            }
        }
        varying_w.sort_unstable();
        varying_w.dedup();
        varying_q.sort_unstable();
        varying_q.dedup();

        // Skeleton at xi = 0 (constant parts only); varying entries are
        // inserted explicitly so their positions exist in the sparse matrix.
        let s0 = map.realize(&vec![0.0; p.d_dim]);
        let mut lp = MathProgram::new(ObjSense::Minimize);
        if mode == Mode::Slack {
            lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        }
        let y0 = lp.num_cols();
        for k in 0..p.n2 {
            let cost = if mode == Mode::Cost { s0.q[k] } else { 0.0 };
            lp.add_col(f64::NEG_INFINITY, f64::INFINITY, cost);
        }
        for pr in 0..map.random_rows {
            let entries = w_support
                .range((pr, 0)..(pr + 1, 0))
                .map(|&(_, k)| (y0 + k, s0.wbar[(pr, k)]))
                .chain((mode == Mode::Slack).then_some((0, 1.0)));
            lp.add_row(entries, RowSense::Ge, 0.0);
        }
        for &i in &split.general_rows {
            lp.add_row((0..p.n2).map(|k| (y0 + k, p.det.dmat[(i, k)])), RowSense::Ge, 0.0);
        }
        let mut session = HighsSession::new(&lp)?;
        session.use_simplex();
        Ok(Self {
            session,
            mode,
            y0,
            varying_w,
            varying_q,
            last_x: None,
            last_relax: f64::NAN,
            det_rhs: Vec::new(),
        })
    }

    fn solve(
        &mut self,
        p: &TwoStageProblem,
        split: &DetSplit,
        s: &ScenarioRealization,
        x: &[f64],
        relax: f64,
    ) -> Result<Option<SolveResult>> {
        if self.last_x.as_deref() != Some(x) {
            self.det_rhs = p.det.rhs(x);
            let Some((lo, hi)) = y_bounds(p, split, &self.det_rhs) else {
                self.last_x = None;
                return Ok(None);
            };
            for k in 0..p.n2 {
                self.session.change_col_bounds(self.y0 + k, lo[k], hi[k]);
            }
            let base = s.hbar.len();
            for (r, &i) in split.general_rows.iter().enumerate() {
                self.session.change_rhs(base + r, self.det_rhs[i]);
            }
            self.last_x = Some(x.to_vec());
        }
        for &(pr, k) in &self.varying_w {
            self.session.change_coeff(pr, self.y0 + k, s.wbar[(pr, k)]);
        }
        if self.mode == Mode::Cost {
            for &k in &self.varying_q {
                self.session.change_cost(self.y0 + k, s.q[k]);
            }
        }
        let rhs = s.rhs(x);
        for (pr, r) in rhs.iter().enumerate() {
            self.session.change_rhs(pr, r - relax);
        }
        self.last_relax = relax;
        let mut res = self.session.run();
        if res.status == SolveStatus::Limit {
            // A stale basis occasionally upsets the simplex; retry from scratch.
            let fresh = self.session.program().clone();
            let mut s2 = HighsSession::new(&fresh)?;
            s2.use_simplex();
            res = s2.run();
            self.session = s2;
        }
        Ok(Some(res))
    }
}

/// Reusable evaluator of `H` and `Q` for one problem.
pub struct Evaluator<'a> {
    p: &'a TwoStageProblem,
    split: DetSplit,
    slack: Option<WarmLp>,
    cost: Option<WarmLp>,
}

impl<'a> Evaluator<'a> {
    pub fn new(p: &'a TwoStageProblem) -> Self {
        Self {
            p,
            split: split_det(p),
            slack: None,
            cost: None,
        }
    }

    pub fn problem(&self) -> &TwoStageProblem {
        self.p
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.p.n1() {
            return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), self.p.n1())));
        }
        Ok(())
    }

    fn run(&mut self, mode: Mode, x: &[f64], xi: &[f64], relax: f64) -> Result<Option<SolveResult>> {
        self.check_dims(x)?;
        let s = self.p.realize(xi)?;
        match &self.p.scenario {
            ScenarioSource::Linear(_) => {
                let slot = match mode {
                    Mode::Slack => &mut self.slack,
                    Mode::Cost => &mut self.cost,
                };
                if slot.is_none() {
                    *slot = Some(WarmLp::new(self.p, &self.split, mode)?);
                }
                slot.as_mut().expect("just built").solve(self.p, &self.split, &s, x, relax)
            }
            ScenarioSource::Opaque { .. } => match build_lp(self.p, &self.split, &s, x, mode, relax) {
                Some(lp) => Ok(Some(solve_lp(&lp, true)?)),
                None => Ok(None),
            },
        }
    }

    /// `H(x, xi)`; `-inf` when the slack LP is unbounded.
    pub fn h(&mut self, x: &[f64], xi: &[f64]) -> Result<f64> {
        if self.p.random_rows() == 0 {
            self.check_dims(x)?;
            self.p.realize(xi)?;
            return if crate::model::det_block_feasible(self.p, x) {
                Ok(f64::NEG_INFINITY)
            } else {
                Err(Error::DeterministicBlockInfeasible)
            };
        }
        let Some(r) = self.run(Mode::Slack, x, xi, 0.0)? else {
            return Err(Error::DeterministicBlockInfeasible);
        };
        match r.status {
            SolveStatus::Optimal => Ok(r.objective),
            SolveStatus::Unbounded => Ok(f64::NEG_INFINITY),
            SolveStatus::Infeasible => Err(Error::DeterministicBlockInfeasible),
            SolveStatus::Limit => Err(Error::Solver(
                r.diagnostics.unwrap_or_else(|| "slack LP hit a limit".into()),
            )),
        }
    }

    /// `Q(x, xi)` given a precomputed `H(x, xi)`.
    pub fn q_given_h(&mut self, x: &[f64], xi: &[f64], h: f64) -> Result<RecourseValue> {
        if h > FEASIBILITY_TOL {
            return Ok(RecourseValue::Infinite);
        }
        let relax = h.max(0.0);
        let Some(r) = self.run(Mode::Cost, x, xi, relax)? else {
            return Err(Error::DeterministicBlockInfeasible);
        };
        match r.status {
            SolveStatus::Optimal => Ok(RecourseValue::Finite(r.objective)),
            SolveStatus::Unbounded => Err(Error::UnboundedRecourse),
            SolveStatus::Infeasible => Err(Error::Solver(format!(
                "recourse LP infeasible although H = {h:e}"
            ))),
            SolveStatus::Limit => Err(Error::Solver(
                r.diagnostics.unwrap_or_else(|| "recourse LP hit a limit".into()),
            )),
        }
    }

    pub fn q(&mut self, x: &[f64], xi: &[f64]) -> Result<RecourseValue> {
        let h = self.h(x, xi)?;
        self.q_given_h(x, xi, h)
    }

    pub fn eval(&mut self, x: &[f64], xi: &[f64]) -> Result<RecourseEval> {
        let h = self.h(x, xi)?;
        let q = self.q_given_h(x, xi, h)?;
        Ok(RecourseEval {
            h_value: h,
            q_value: q,
            feasible: h <= FEASIBILITY_TOL,
        })
    }
}

pub fn eval_h(p: &TwoStageProblem, x: &[f64], xi: &[f64]) -> Result<f64> {
    Evaluator::new(p).h(x, xi)
}

pub fn eval_q(p: &TwoStageProblem, x: &[f64], xi: &[f64]) -> Result<RecourseValue> {
    Evaluator::new(p).q(x, xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodEstimate {
    pub phi_hat: f64,
    pub m: usize,
    pub ci_halfwidth: f64,
    pub seed: u64,
}

impl LikelihoodEstimate {
    pub fn violation(&self) -> f64 {
        1.0 - self.phi_hat
    }
}

/// Fraction of `m` fresh scenarios drawn from `spec` (seeded by `seed`) at
/// which `x` has a feasible recourse action.
pub fn estimate_recourse_likelihood(
    p: &TwoStageProblem,
    x: &[f64],
    spec: &DistributionSpec,
    m: usize,
    seed: u64,
) -> Result<LikelihoodEstimate> {
    let mut ev = Evaluator::new(p);
    estimate_with(&mut ev, x, spec, m, seed)
}

pub fn estimate_with(
    ev: &mut Evaluator<'_>,
    x: &[f64],
    spec: &DistributionSpec,
    m: usize,
    seed: u64,
) -> Result<LikelihoodEstimate> {
    if m == 0 {
        return Err(Error::InvalidInput("evaluation sample size must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut ok = 0usize;
    for _ in 0..m {
        let xi = spec.draw_one(&mut rng);
        if ev.h(x, &xi)? <= FEASIBILITY_TOL {
            ok += 1;
        }
    }
    let phi = ok as f64 / m as f64;
    Ok(LikelihoodEstimate {
        phi_hat: phi,
        m,
        ci_halfwidth: 1.96 * (phi * (1.0 - phi) / m as f64).sqrt(),
        seed,
    })
}
