//! Standard SAA in extensive form, and exhaustive evaluation over finite X.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{Evaluator, RecourseValue};
use crate::model::{ScenarioRealization, TwoStageProblem};
use crate::sampling::SampleSet;
use crate::solver_backend::{
    highs_version, solve_lp, solve_milp, MathProgram, ObjSense, RowSense, SolveResult, SolveStatus,
    DEFAULT_MILP_TIME_LIMIT, FEASIBILITY_TOL,
};

/// Column and row offsets of one recourse copy inside a larger program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub y0: usize,
    pub row0: usize,
    pub random_rows: usize,
}

/// A program whose first `n1` columns are `x`, followed by recourse copies.
#[derive(Debug, Clone)]
pub struct ExtensiveForm {
    pub program: MathProgram,
    pub n1: usize,
    pub n2: usize,
    pub scenario_blocks: Vec<BlockLayout>,
    pub extra_blocks: Vec<BlockLayout>,
}

impl ExtensiveForm {
    /// Program with only the first-stage columns and `A x <= b`.
    pub fn first_stage(p: &TwoStageProblem) -> Self {
        let mut lp = MathProgram::new(ObjSense::Minimize);
        for (k, &ck) in p.c.iter().enumerate() {
            lp.add_col(f64::NEG_INFINITY, f64::INFINITY, ck);
            if p.x_set.integrality.contains(&k) {
                lp.set_integer(k, true);
            }
        }
        let a = &p.x_set.a;
        for i in 0..a.rows() {
            let nz: Vec<(usize, f64)> = a.row(i).iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
            match nz.as_slice() {
                [(k, v)] if *v > 0.0 => lp.tighten_col_bounds(*k, f64::NEG_INFINITY, p.x_set.b[i] / v),
                [(k, v)] => lp.tighten_col_bounds(*k, p.x_set.b[i] / v, f64::INFINITY),
                _ => {
                    lp.add_row(nz, RowSense::Le, p.x_set.b[i]);
                }
            }
        }
        Self {
            program: lp,
            n1: p.n1(),
            n2: p.n2,
            scenario_blocks: Vec::new(),
            extra_blocks: Vec::new(),
        }
    }

    /// Appends a recourse copy `y` with objective weight `weight * q`,
    /// rows `W y + T x >= h + pad` and `D y + C x >= d`.
    pub fn add_block(&mut self, p: &TwoStageProblem, s: &ScenarioRealization, weight: f64, pad: f64) -> BlockLayout {
        let lp = &mut self.program;
        let y0 = lp.num_cols();
        for k in 0..p.n2 {
            lp.add_col(f64::NEG_INFINITY, f64::INFINITY, weight * s.q[k]);
        }
        let row0 = lp.num_rows();
        for pr in 0..s.hbar.len() {
            let entries = (0..p.n2)
                .map(|k| (y0 + k, s.wbar[(pr, k)]))
                .chain((0..self.n1).map(|k| (k, s.tbar[(pr, k)])));
            lp.add_row(entries, RowSense::Ge, s.hbar[pr] + pad);
        }
        add_det_rows(lp, p, y0);
        BlockLayout {
            y0,
            row0,
            random_rows: s.hbar.len(),
        }
    }

    pub fn x_of(&self, primal: &[f64]) -> Vec<f64> {
        primal[..self.n1].to_vec()
    }
}

/// `D y + C x >= d`; rows with one entry in D and none in C become bounds.
fn add_det_rows(lp: &mut MathProgram, p: &TwoStageProblem, y0: usize) {
    let det = &p.det;
    for i in 0..det.rows() {
        let dz: Vec<(usize, f64)> = det.dmat.row(i).iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        let c_zero = det.cmat.row(i).iter().all(|&v| v == 0.0);
        match dz.as_slice() {
            [(k, v)] if c_zero => {
                let b = det.d[i] / v;
                if *v > 0.0 {
                    lp.tighten_col_bounds(y0 + k, b, f64::INFINITY);
                } else {
                    lp.tighten_col_bounds(y0 + k, f64::NEG_INFINITY, b);
                }
            }
            _ => {
                let entries = dz
                    .iter()
                    .map(|&(k, v)| (y0 + k, v))
                    .chain(det.cmat.row(i).iter().copied().enumerate().filter(|&(_, v)| v != 0.0));
                lp.add_row(entries, RowSense::Ge, det.d[i]);
            }
        }
    }
}

/// Extensive form of the SAA problem over `s`, with random rows padded by `pad`.
pub fn build_extensive_form_padded(p: &TwoStageProblem, s: &SampleSet, pad: f64) -> Result<ExtensiveForm> {
    if s.is_empty() {
        return Err(Error::InvalidInput("sample must contain at least one scenario".into()));
    }
    if s.dim() != p.d_dim {
        return Err(Error::Dimension(format!("sample dimension {} != d = {}", s.dim(), p.d_dim)));
    }
    let mut ef = ExtensiveForm::first_stage(p);
    let w = 1.0 / s.len() as f64;
    for xi in &s.rows {
        let r = p.realize(xi)?;
        let b = ef.add_block(p, &r, w, pad);
        ef.scenario_blocks.push(b);
    }
    Ok(ef)
}

/// Variables `(x, y^1, ..., y^N)`, objective `c'x + (1/N) sum q_j' y^j`.
pub fn build_extensive_form(p: &TwoStageProblem, s: &SampleSet) -> Result<ExtensiveForm> {
    build_extensive_form_padded(p, s, 0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaaSolution {
    pub x: Vec<f64>,
    /// Recomputed `Q(x, xi^j)` per scenario.
    pub theta: Vec<f64>,
    /// `c'x + mean(theta)`.
    pub objective: f64,
    /// Optimal value reported by the solver for the program actually solved.
    pub program_objective: f64,
    pub is_vertex: bool,
    pub n: usize,
    pub seed: Option<u64>,
    pub solver: String,
}

impl SaaSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Solves a prepared program (LP or MILP) and maps its status to errors.
pub(crate) fn solve_form(ef: &ExtensiveForm) -> Result<SolveResult> {
    let r = if ef.program.is_mip() {
        solve_milp(&ef.program, DEFAULT_MILP_TIME_LIMIT)?
    } else {
        solve_lp(&ef.program, true)?
    };
    check_status(r)
}

pub(crate) fn check_status(r: SolveResult) -> Result<SolveResult> {
    match r.status {
        SolveStatus::Optimal => Ok(r),
        SolveStatus::Infeasible => Err(Error::Infeasible(
            "X is empty or the sampled scenarios admit no common first-stage decision".into(),
        )),
        SolveStatus::Unbounded => Err(Error::UnboundedRecourse),
        SolveStatus::Limit => Err(Error::Solver(r.diagnostics.unwrap_or_else(|| "solver limit reached".into()))),
    }
}

/// Recomputes per-scenario recourse costs at `x` and packages the solution.
pub(crate) fn package_solution(
    p: &TwoStageProblem,
    s: &SampleSet,
    x: Vec<f64>,
    r: &SolveResult,
    ev: &mut Evaluator<'_>,
) -> Result<SaaSolution> {
    let mut theta = Vec::with_capacity(s.len());
    for xi in &s.rows {
        match ev.q(&x, xi)? {
            RecourseValue::Finite(v) => theta.push(v),
            RecourseValue::Infinite => {
                return Err(Error::Solver(
                    "solver returned a first-stage point infeasible for a training scenario".into(),
                ))
            }
        }
    }
    let objective = crate::model::dot(&p.c, &x) + theta.iter().sum::<f64>() / s.len() as f64;
    Ok(SaaSolution {
        objective,
        program_objective: r.objective,
        is_vertex: r.is_vertex && !r.primal.is_none() && p.x_set.integrality.is_empty(),
        n: s.len(),
        seed: s.seed,
        solver: highs_version(),
        theta,
        x,
    })
}

pub fn solve_saa(p: &TwoStageProblem, s: &SampleSet) -> Result<SaaSolution> {
    let ef = build_extensive_form(p, s)?;
    let r = solve_form(&ef)?;
    let x = ef.x_of(r.primal.as_deref().expect("optimal result has a primal"));
    package_solution(p, s, x, &r, &mut Evaluator::new(p))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateEval {
    pub x: Vec<f64>,
    /// `None` encodes `+inf`.
    pub fhat: Option<f64>,
    pub feasible_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteXResult {
    pub candidates: Vec<CandidateEval>,
    /// `None` when every candidate is infinite.
    pub vhat: Option<f64>,
    /// Indices into `candidates`.
    pub delta_optimal_set: Vec<usize>,
}

/// `fhat_N` for every candidate, `vhat_N`, and the delta-optimal set. When
/// every candidate is infinite the set is all candidates.
pub fn solve_finite_x(p: &TwoStageProblem, candidates: &[Vec<f64>], s: &SampleSet, delta: f64) -> Result<FiniteXResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("candidate list is empty".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput("delta must be nonnegative".into()));
    }
    let mut ev = Evaluator::new(p);
    let mut out = Vec::with_capacity(candidates.len());
    for x in candidates {
        let mut total = 0.0;
        let mut feasible = 0;
        for xi in &s.rows {
            let h = ev.h(x, xi)?;
            if h <= FEASIBILITY_TOL {
                feasible += 1;
                if let RecourseValue::Finite(v) = ev.q_given_h(x, xi, h)? {
                    total += v;
                }
            }
        }
        let fhat = (feasible == s.len()).then(|| crate::model::dot(&p.c, x) + total / s.len() as f64);
        out.push(CandidateEval {
            x: x.clone(),
            fhat,
            feasible_count: feasible,
        });
    }
    let vhat = out.iter().filter_map(|c| c.fhat).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let delta_optimal_set = match vhat {
        Some(v) => (0..out.len()).filter(|&i| out[i].fhat.is_some_and(|f| f <= v + delta)).collect(),
        None => (0..out.len()).collect(),
    };
    Ok(FiniteXResult {
        candidates: out,
        vhat,
        delta_optimal_set,
    })
}
