//! Padded SAA: rhs-only padding, the monotone shortcut, and constraint
//! generation over mixed scenarios with MILP or brute-force separation.
//!
//! The padded feasibility condition at a scenario `xi` is `H(x, xi) + gamma <= 0`,
//! i.e. there is a `z` with `W(xi) z >= h(xi) - T(xi) x + gamma e` and
//! `D z >= d - C x`. Each enforced scenario therefore contributes one extra
//! recourse copy with zero objective weight.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::Evaluator;
use crate::model::{mixed_scenario, Block, LinearScenarioMap, TwoStageProblem};
use crate::saa::{build_extensive_form, build_extensive_form_padded, check_status, package_solution, ExtensiveForm, SaaSolution};
use crate::sampling::{componentwise_extrema, SampleSet};
use crate::solver_backend::{
    solve_milp, HighsSession, MathProgram, ObjSense, RowSense, SolveResult, SolveStatus, DEFAULT_MILP_TIME_LIMIT,
    FEASIBILITY_TOL,
};

/// Direction in which `H(x, .)` is nondecreasing along one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    /// Linear scenario map, `d x N` binaries.
    General,
    /// Fixed recourse, box corners, `d x 2` binaries.
    FixedRecourse,
    /// Exhaustive enumeration of `[N]^d` (bounded by `limit`).
    BruteForce { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PaddingMode {
    RhsOnly,
    MonotoneShortcut { signs: Vec<Direction> },
    MixedScenarioCg {
        separation: Separation,
        /// Coordinates with a known direction are pinned to their extreme.
        #[serde(default)]
        pins: Vec<Option<Direction>>,
    },
}

pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 100_000;

fn require_fixed_data(p: &TwoStageProblem) -> Result<&LinearScenarioMap> {
    let map = p
        .linear_map()
        .ok_or_else(|| Error::ModeNotApplicable("rhs-only padding needs a linear scenario map".into()))?;
    if !map.fixed_recourse_given(&[]) || !map.fixed_tech_given(&[]) {
        return Err(Error::ModeNotApplicable(
            "rhs-only padding requires W and T independent of xi".into(),
        ));
    }
    Ok(map)
}

/// Extensive form with every scenario's random rows tightened by `gamma`.
pub fn build_padded_rhs(p: &TwoStageProblem, s: &SampleSet, gamma: f64) -> Result<ExtensiveForm> {
    check_gamma(gamma)?;
    require_fixed_data(p)?;
    build_extensive_form_padded(p, s, gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("padding level must be nonnegative, got {gamma}")))
    }
}

/// Per-coordinate extreme of the sample in each coordinate's worst direction,
/// with the sample index attaining it.
pub fn dominating_index(s: &SampleSet, signs: &[Direction]) -> Result<Vec<usize>> {
    if signs.len() != s.dim() {
        return Err(Error::Dimension(format!("{} signs for dimension {}", signs.len(), s.dim())));
    }
    Ok(signs.iter().enumerate().map(|(q, &dir)| extreme_index(s, q, dir)).collect())
}

fn extreme_index(s: &SampleSet, q: usize, dir: Direction) -> usize {
    let mut best = 0;
    for j in 1..s.len() {
        let (v, b) = (s.rows[j][q], s.rows[best][q]);
        let better = match dir {
            Direction::Increasing => v > b,
            Direction::Decreasing => v < b,
        };
        if better {
            best = j;
        }
    }
    best
}

pub fn dominating_scenario(s: &SampleSet, signs: &[Direction]) -> Result<Vec<f64>> {
    mixed_scenario(&s.rows, &dominating_index(s, signs)?)
}

/// Standard extensive form plus one padded recourse copy at the dominating scenario.
pub fn build_padded_monotone(p: &TwoStageProblem, s: &SampleSet, gamma: f64, signs: &[Direction]) -> Result<ExtensiveForm> {
    check_gamma(gamma)?;
    let xi = dominating_scenario(s, signs)?;
    let mut ef = build_extensive_form(p, s)?;
    let r = p.realize(&xi)?;
    let b = ef.add_block(p, &r, 0.0, gamma);
    ef.extra_blocks.push(b);
    Ok(ef)
}

/// Padded master problem kept alive in one solver session, so that extra
/// scenarios and new padding levels are handled by warm re-solves.
pub struct PaddedMaster<'a> {
    p: &'a TwoStageProblem,
    s: &'a SampleSet,
    ef: ExtensiveForm,
    session: HighsSession,
    gamma: f64,
    scenarios: Vec<Vec<f64>>,
    tightened: bool,
}

impl<'a> PaddedMaster<'a> {
    pub fn new(p: &'a TwoStageProblem, s: &'a SampleSet, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let ef = build_extensive_form(p, s)?;
        let mut session = HighsSession::new(&ef.program)?;
        session.use_simplex();
        Ok(Self {
            p,
            s,
            ef,
            session,
            gamma,
            scenarios: Vec::new(),
            tightened: false,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn form(&self) -> &ExtensiveForm {
        &self.ef
    }

    pub fn scenarios(&self) -> &[Vec<f64>] {
        &self.scenarios
    }

    /// Enforces `H(x, xi) + gamma <= 0`.
    pub fn add_scenario(&mut self, xi: &[f64]) -> Result<()> {
        let r = self.p.realize(xi)?;
        let b = self.ef.add_block(self.p, &r, 0.0, self.gamma);
        self.ef.extra_blocks.push(b);
        self.session.extend_to(&self.ef.program)?;
        self.scenarios.push(xi.to_vec());
        Ok(())
    }

    /// Changes the padding level on every extra block.
    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        check_gamma(gamma)?;
        let shift = gamma - self.gamma;
        for b in &self.ef.extra_blocks {
            for row in b.row0..b.row0 + b.random_rows {
                let rhs = self.ef.program.rhs(row) + shift;
                self.ef.program.set_rhs(row, rhs);
                self.session.change_rhs(row, rhs);
            }
        }
        self.gamma = gamma;
        Ok(())
    }

    /// Tightens the backend's primal feasibility tolerance tenfold (once).
    pub fn tighten(&mut self) -> bool {
        if self.tightened {
            return false;
        }
        self.session.set_primal_tolerance(1e-8);
        self.tightened = true;
        true
    }

    pub fn solve(&mut self) -> Result<SolveResult> {
        let r = self.session.run();
        match r.status {
            SolveStatus::Infeasible => Err(Error::Infeasible(format!(
                "padded master infeasible at gamma = {}; padding too large for this sample",
                self.gamma
            ))),
            _ => check_status(r),
        }
    }

    pub fn solve_x(&mut self) -> Result<(Vec<f64>, SolveResult)> {
        let r = self.solve()?;
        let x = self.ef.x_of(r.primal.as_deref().expect("optimal result has a primal"));
        Ok((x, r))
    }

    pub fn solution(&mut self, ev: &mut Evaluator<'_>) -> Result<SaaSolution> {
        let (x, r) = self.solve_x()?;
        package_solution(self.p, self.s, x, &r, ev)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MilpStats {
    pub node_count: Option<u64>,
    pub lp_relaxation_value: Option<f64>,
    /// `|lp - ip| / max(|ip|, 1)`.
    pub lp_gap: Option<f64>,
    pub mip_gap: Option<f64>,
    pub wall_time_s: f64,
    pub timed_out: bool,
    pub binaries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationResult {
    /// Zero-based sample index per coordinate; `None` only when a time limit
    /// was hit before any incumbent was found.
    pub j: Option<Vec<usize>>,
    /// `H(x_hat, xi^J)` re-evaluated at the decoded scenario.
    pub value: f64,
    /// Objective reported by the MILP (absent for brute force).
    pub milp_value: Option<f64>,
    pub stats: MilpStats,
}

/// How a coordinate enters the separation MILP.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coord {
    Free,
    Fixed { value: f64, index: usize },
}

/// Problem data shared by both separation formulations at a fixed `x_hat`.
struct SepData<'a> {
    p: &'a TwoStageProblem,
    s: &'a SampleSet,
    map: &'a LinearScenarioMap,
    /// Kind of every user coordinate; the constant coordinate is implicit.
    coords: Vec<Coord>,
    /// `g[p][q] = Hbar_pq - sum_k x_k T^k_pq`, over all `d + 1` columns.
    g: Vec<Vec<f64>>,
    det_rhs: Vec<f64>,
}

impl<'a> SepData<'a> {
    fn new(p: &'a TwoStageProblem, s: &'a SampleSet, x: &[f64], pins: &[Option<Direction>]) -> Result<Self> {
        let map = p
            .linear_map()
            .ok_or_else(|| Error::ModeNotApplicable("separation MILPs need a linear scenario map".into()))?;
        if s.is_empty() || s.dim() != p.d_dim {
            return Err(Error::Dimension("sample does not match the problem dimension".into()));
        }
        if !pins.is_empty() && pins.len() != p.d_dim {
            return Err(Error::Dimension(format!("{} pins for dimension {}", pins.len(), p.d_dim)));
        }
        if x.len() != p.n1() {
            return Err(Error::Dimension("x has the wrong length".into()));
        }
        let (lo, hi) = componentwise_extrema(s)?;
        let coords = (0..p.d_dim)
            .map(|q| match pins.get(q).copied().flatten() {
                Some(dir) => {
                    let j = extreme_index(s, q, dir);
                    Coord::Fixed { value: s.rows[j][q], index: j }
                }
                None if lo[q] == hi[q] => Coord::Fixed { value: lo[q], index: 0 },
                None => Coord::Free,
            })
            .collect();
        let width = map.width();
        let rows = map.random_rows();
        let mut g = vec![vec![0.0; width]; rows];
        for t in p.compiled_map().expect("linear map").terms.iter() {
            match t.block {
                Block::H => g[t.row][t.coord] += t.value,
                Block::T => g[t.row][t.coord] -= x[t.col] * t.value,
                _ => {}
            }
        }
        Ok(Self {
            p,
            s,
            map,
            coords,
            g,
            det_rhs: p.det.rhs(x),
        })
    }

    /// Fixed value of column `q` of the map matrices, if it is not free.
    fn fixed(&self, q: usize) -> Option<f64> {
        if q == self.p.d_dim {
            return Some(1.0);
        }
        match self.coords[q] {
            Coord::Fixed { value, .. } => Some(value),
            Coord::Free => None,
        }
    }

    fn free(&self) -> Vec<usize> {
        (0..self.p.d_dim).filter(|&q| self.coords[q] == Coord::Free).collect()
    }

    fn pinned_mask(&self) -> Vec<bool> {
        self.coords.iter().map(|c| matches!(c, Coord::Fixed { .. })).collect()
    }

    /// Objective coefficient of `alpha_p` from the non-free columns.
    fn alpha_cost(&self, p: usize) -> f64 {
        (0..=self.p.d_dim).filter_map(|q| self.fixed(q).map(|v| self.g[p][q] * v)).sum()
    }

    /// `W_pk` restricted to the non-free columns.
    fn fixed_w(&self, p: usize, k: usize) -> f64 {
        let m = &self.map.wk[k];
        (0..=self.p.d_dim).filter_map(|q| self.fixed(q).map(|v| m[(p, q)] * v)).sum()
    }

    fn decode_fixed(&self, q: usize) -> usize {
        match self.coords[q] {
            Coord::Fixed { index, .. } => index,
            Coord::Free => unreachable!("free coordinate decoded by the MILP"),
        }
    }

    /// Adds `alpha` and `beta` columns; returns their first indices.
    fn add_dual_cols(&self, lp: &mut MathProgram) -> (usize, usize) {
        let a0 = lp.num_cols();
        for p in 0..self.map.random_rows() {
            lp.add_col(0.0, f64::INFINITY, self.alpha_cost(p));
        }
        let b0 = lp.num_cols();
        for i in 0..self.p.det.rows() {
            lp.add_col(0.0, f64::INFINITY, self.det_rhs[i]);
        }
        (a0, b0)
    }
}

fn finish_separation(
    data: &SepData<'_>,
    x: &[f64],
    r: SolveResult,
    binaries: usize,
    decode: impl Fn(&[f64]) -> Vec<usize>,
) -> Result<SeparationResult> {
    let mut stats = MilpStats {
        node_count: r.node_count,
        lp_relaxation_value: r.lp_relaxation_value,
        lp_gap: r.lp_gap(),
        mip_gap: r.mip_gap,
        wall_time_s: r.wall_time.as_secs_f64(),
        timed_out: r.status == SolveStatus::Limit,
        binaries,
    };
    let mut ev = Evaluator::new(data.p);
    match r.status {
        SolveStatus::Unbounded => return Err(Error::DeterministicBlockInfeasible),
        SolveStatus::Infeasible => {
            // Every mixed scenario has an empty dual, hence H = -inf everywhere.
            let j = vec![0; data.p.d_dim];
            let value = ev.h(x, &mixed_scenario(&data.s.rows, &j)?)?;
            return Ok(SeparationResult {
                j: Some(j),
                value,
                milp_value: Some(f64::NEG_INFINITY),
                stats,
            });
        }
        _ => {}
    }
    let Some(primal) = r.primal.as_deref() else {
        stats.timed_out = true;
        return Ok(SeparationResult {
            j: None,
            value: f64::NAN,
            milp_value: None,
            stats,
        });
    };
    let j = decode(primal);
    let value = ev.h(x, &mixed_scenario(&data.s.rows, &j)?)?;
    if r.status == SolveStatus::Optimal && (value - r.objective).abs() > 1e-5 {
        return Err(Error::SeparationMismatch {
            milp: r.objective,
            recheck: value,
        });
    }
    Ok(SeparationResult {
        j: Some(j),
        value,
        milp_value: Some(r.objective),
        stats,
    })
}

/// Separation MILP for a general linear scenario map. Returns the program and
/// the column index of `delta[q][j]` for each free coordinate.
fn build_general(data: &SepData<'_>) -> (MathProgram, Vec<(usize, usize)>) {
    let (p, s) = (data.p, data.s);
    let (rows, n) = (data.map.random_rows(), s.len());
    let free = data.free();
    let mut lp = MathProgram::new(ObjSense::Maximize);
    let (a0, b0) = data.add_dual_cols(&mut lp);
    // delta_qj then z_pqj per free coordinate.
    let mut delta0 = Vec::with_capacity(free.len());
    let mut z0 = Vec::with_capacity(free.len());
    for &q in &free {
        delta0.push(lp.num_cols());
        for _ in 0..n {
            lp.add_binary_col(0.0);
        }
        z0.push(lp.num_cols());
        for pr in 0..rows {
            for j in 0..n {
                lp.add_col(0.0, f64::INFINITY, data.g[pr][q] * s.rows[j][q]);
            }
        }
    }
    let z = |fi: usize, pr: usize, j: usize| z0[fi] + pr * n + j;
    for (fi, _) in free.iter().enumerate() {
        for j in 0..n {
            lp.add_row((0..rows).map(|pr| (z(fi, pr, j), 1.0)).chain([(delta0[fi] + j, -1.0)]), RowSense::Eq, 0.0);
        }
        for pr in 0..rows {
            lp.add_row((0..n).map(|j| (z(fi, pr, j), 1.0)).chain([(a0 + pr, -1.0)]), RowSense::Eq, 0.0);
        }
    }
    let free_pos: Vec<Option<usize>> = (0..p.d_dim).map(|q| free.iter().position(|&f| f == q)).collect();
    for k in 0..p.n2 {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for pr in 0..rows {
            entries.push((a0 + pr, data.fixed_w(pr, k)));
            let wk = &data.map.wk[k];
            for (fi, &q) in free.iter().enumerate() {
                let w = wk[(pr, q)];
                if w != 0.0 {
                    debug_assert_eq!(free_pos[q], Some(fi));
                    entries.extend((0..n).map(|j| (z(fi, pr, j), w * s.rows[j][q])));
                }
            }
        }
        entries.extend((0..p.det.rows()).map(|i| (b0 + i, p.det.dmat[(i, k)])));
        lp.add_row(entries, RowSense::Eq, 0.0);
    }
    lp.add_row((0..rows).map(|pr| (a0 + pr, 1.0)), RowSense::Eq, 1.0);
    let deltas = free.iter().zip(&delta0).map(|(&q, &d0)| (q, d0)).collect();
    (lp, deltas)
}

/// Separation MILP with fixed recourse over the corners of the sample box.
fn build_fixed_recourse(data: &SepData<'_>) -> Result<(MathProgram, Vec<(usize, usize)>)> {
    let p = data.p;
    if !data.map.fixed_recourse_given(&data.pinned_mask()) {
        return Err(Error::ModeNotApplicable(
            "fixed-recourse separation requires W independent of the free coordinates".into(),
        ));
    }
    let (lo, hi) = componentwise_extrema(data.s)?;
    let rows = data.map.random_rows();
    let mdet = p.det.rows();
    let free = data.free();
    let wbar: Vec<Vec<f64>> = (0..rows).map(|pr| (0..p.n2).map(|k| data.fixed_w(pr, k)).collect()).collect();
    let mut lp = MathProgram::new(ObjSense::Maximize);
    let (a0, b0) = data.add_dual_cols(&mut lp);
    let mut deltas = Vec::with_capacity(free.len());
    for &q in &free {
        let d0 = lp.num_cols();
        lp.add_binary_col(0.0);
        lp.add_binary_col(0.0);
        deltas.push((q, d0));
        let corner = [lo[q], hi[q]];
        let z0 = lp.num_cols();
        for pr in 0..rows {
            for t in 0..2 {
                lp.add_col(0.0, f64::INFINITY, data.g[pr][q] * corner[t]);
            }
        }
        let w0 = lp.num_cols();
        for _ in 0..mdet * 2 {
            lp.add_col(0.0, f64::INFINITY, 0.0);
        }
        let z = |pr: usize, t: usize| z0 + pr * 2 + t;
        let w = |i: usize, t: usize| w0 + i * 2 + t;
        for t in 0..2 {
            lp.add_row((0..rows).map(|pr| (z(pr, t), 1.0)).chain([(d0 + t, -1.0)]), RowSense::Eq, 0.0);
        }
        for pr in 0..rows {
            lp.add_row([(z(pr, 0), 1.0), (z(pr, 1), 1.0), (a0 + pr, -1.0)], RowSense::Eq, 0.0);
        }
        for i in 0..mdet {
            lp.add_row([(w(i, 0), 1.0), (w(i, 1), 1.0), (b0 + i, -1.0)], RowSense::Eq, 0.0);
        }
        for t in 0..2 {
            for k in 0..p.n2 {
                let entries = (0..rows)
                    .map(|pr| (z(pr, t), wbar[pr][k]))
                    .chain((0..mdet).map(|i| (w(i, t), p.det.dmat[(i, k)])));
                lp.add_row(entries, RowSense::Eq, 0.0);
            }
        }
    }
    if free.is_empty() {
        for k in 0..p.n2 {
            let entries = (0..rows)
                .map(|pr| (a0 + pr, wbar[pr][k]))
                .chain((0..mdet).map(|i| (b0 + i, p.det.dmat[(i, k)])));
            lp.add_row(entries, RowSense::Eq, 0.0);
        }
    }
    lp.add_row((0..rows).map(|pr| (a0 + pr, 1.0)), RowSense::Eq, 1.0);
    Ok((lp, deltas))
}

fn argext(s: &SampleSet, q: usize, v: f64) -> usize {
    s.rows.iter().position(|r| r[q] == v).expect("extreme value comes from the sample")
}

/// Options shared by the MILP separators.
#[derive(Debug, Clone, Default)]
pub struct SepOptions {
    pub pins: Vec<Option<Direction>>,
    pub time_limit: Option<Duration>,
    /// Write the MILP to this path before solving.
    pub dump: Option<std::path::PathBuf>,
}

/// Builds the general separation MILP at `x` (for inspection or dumping).
pub fn separation_program_general(p: &TwoStageProblem, s: &SampleSet, x: &[f64], pins: &[Option<Direction>]) -> Result<MathProgram> {
    Ok(build_general(&SepData::new(p, s, x, pins)?).0)
}

pub fn separation_program_fixed_recourse(
    p: &TwoStageProblem,
    s: &SampleSet,
    x: &[f64],
    pins: &[Option<Direction>],
) -> Result<MathProgram> {
    Ok(build_fixed_recourse(&SepData::new(p, s, x, pins)?)?.0)
}

/// `max_J H(x, xi^J)` through the general MILP.
pub fn separation_milp_general(p: &TwoStageProblem, s: &SampleSet, x: &[f64], opts: &SepOptions) -> Result<SeparationResult> {
    let data = SepData::new(p, s, x, &opts.pins)?;
    let (lp, deltas) = build_general(&data);
    if let Some(path) = &opts.dump {
        crate::solver_backend::dump_lp(&lp, path)?;
    }
    let binaries = deltas.len() * s.len();
    let r = solve_milp(&lp, opts.time_limit.unwrap_or(DEFAULT_MILP_TIME_LIMIT))?;
    let n = s.len();
    finish_separation(&data, x, r, binaries, |v| {
        (0..p.d_dim)
            .map(|q| match deltas.iter().find(|&&(fq, _)| fq == q) {
                Some(&(_, d0)) => (0..n).max_by(|&a, &b| v[d0 + a].total_cmp(&v[d0 + b])).unwrap_or(0),
                None => data.decode_fixed(q),
            })
            .collect()
    })
}

/// `max_J H(x, xi^J)` through the fixed-recourse MILP over box corners.
pub fn separation_milp_fixed_recourse(p: &TwoStageProblem, s: &SampleSet, x: &[f64], opts: &SepOptions) -> Result<SeparationResult> {
    let data = SepData::new(p, s, x, &opts.pins)?;
    let (lp, deltas) = build_fixed_recourse(&data)?;
    if let Some(path) = &opts.dump {
        crate::solver_backend::dump_lp(&lp, path)?;
    }
    let (lo, hi) = componentwise_extrema(s)?;
    let r = solve_milp(&lp, opts.time_limit.unwrap_or(DEFAULT_MILP_TIME_LIMIT))?;
    finish_separation(&data, x, r, deltas.len() * 2, |v| {
        (0..p.d_dim)
            .map(|q| match deltas.iter().find(|&&(fq, _)| fq == q) {
                Some(&(_, d0)) if v[d0 + 1] > v[d0] => argext(s, q, hi[q]),
                Some(_) => argext(s, q, lo[q]),
                None => data.decode_fixed(q),
            })
            .collect()
    })
}

/// Exhaustive `max_J H(x, xi^J)` over `[N]^d`; ties go to the first `J` in
/// lexicographic order.
pub fn brute_force_separation(p: &TwoStageProblem, s: &SampleSet, x: &[f64], limit: usize) -> Result<SeparationResult> {
    let (n, d) = (s.len(), s.dim());
    if n == 0 {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let count = (n as f64).powi(d as i32);
    if count > limit as f64 {
        return Err(Error::BudgetExceeded { count, limit });
    }
    let t0 = Instant::now();
    let mut ev = Evaluator::new(p);
    let mut j = vec![0usize; d];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let h = ev.h(x, &mixed_scenario(&s.rows, &j)?)?;
        if best.as_ref().is_none_or(|(b, _)| h > *b) {
            best = Some((h, j.clone()));
        }
        // Odometer increment, last coordinate fastest.
        let mut q = d;
        loop {
            if q == 0 {
                let (value, j) = best.expect("at least one scenario evaluated");
                return Ok(SeparationResult {
                    j: Some(j),
                    value,
                    milp_value: None,
                    stats: MilpStats {
                        wall_time_s: t0.elapsed().as_secs_f64(),
                        ..MilpStats::default()
                    },
                });
            }
            q -= 1;
            j[q] += 1;
            if j[q] < n {
                break;
            }
            j[q] = 0;
        }
    }
}

pub fn separate(
    p: &TwoStageProblem,
    s: &SampleSet,
    x: &[f64],
    method: Separation,
    opts: &SepOptions,
) -> Result<SeparationResult> {
    match method {
        Separation::General => separation_milp_general(p, s, x, opts),
        Separation::FixedRecourse => separation_milp_fixed_recourse(p, s, x, opts),
        Separation::BruteForce { limit } => brute_force_separation(p, s, x, limit),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgStatus {
    FeasibleCertified,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgIteration {
    pub iteration: usize,
    pub master_objective: f64,
    pub separation_value: f64,
    /// Mixed scenario added after this iteration (absent on the last one).
    pub added: Option<Vec<usize>>,
    pub master_time_s: f64,
    pub separation_time_s: f64,
    pub stats: MilpStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgTrace {
    pub iterations: Vec<CgIteration>,
    pub status: CgStatus,
    pub gamma: f64,
    pub separations_solved: usize,
    pub total_time_s: f64,
    pub separation_time_s: f64,
    pub tightened: bool,
}

impl CgTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct CgOptions {
    pub separation: Separation,
    pub pins: Vec<Option<Direction>>,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    /// Mixed scenarios enforced before the first master solve.
    pub seed_scenarios: Vec<Vec<usize>>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            separation: Separation::General,
            pins: Vec::new(),
            max_iters: 200,
            time_limit: None,
            seed_scenarios: Vec::new(),
        }
    }
}

/// Master/separation loop until `max_J H(x, xi^J) + gamma <= tol`.
pub fn constraint_generation_solve(
    p: &TwoStageProblem,
    s: &SampleSet,
    gamma: f64,
    opts: &CgOptions,
) -> Result<(SaaSolution, CgTrace)> {
    let t0 = Instant::now();
    let mut master = PaddedMaster::new(p, s, gamma)?;
    let mut pool: HashSet<Vec<usize>> = HashSet::new();
    for j in &opts.seed_scenarios {
        if pool.insert(j.clone()) {
            master.add_scenario(&mixed_scenario(&s.rows, j)?)?;
        }
    }
    let sep_opts = SepOptions {
        pins: opts.pins.clone(),
        time_limit: opts.time_limit,
        dump: None,
    };
    let mut iterations: Vec<CgIteration> = Vec::new();
    let mut sep_time = 0.0;
    let mut status = CgStatus::IterationLimit;
    let mut last = None;
    for it in 0..opts.max_iters {
        let tm = Instant::now();
        let (x, r) = master.solve_x()?;
        let master_time = tm.elapsed().as_secs_f64();
        let sep = separate(p, s, &x, opts.separation, &sep_opts)?;
        sep_time += sep.stats.wall_time_s;
        let mut rec = CgIteration {
            iteration: it,
            master_objective: r.objective,
            separation_value: sep.value,
            added: None,
            master_time_s: master_time,
            separation_time_s: sep.stats.wall_time_s,
            stats: sep.stats.clone(),
        };
        let done = sep.value + gamma <= FEASIBILITY_TOL;
        last = Some((x, r));
        if done {
            iterations.push(rec);
            status = CgStatus::FeasibleCertified;
            break;
        }
        let j = sep
            .j
            .ok_or_else(|| Error::CgStalled("separation hit its time limit without an incumbent".into()))?;
        if pool.contains(&j) {
            iterations.push(rec);
            if master.tighten() {
                continue;
            }
            return Err(Error::CgStalled(format!(
                "mixed scenario {j:?} is already enforced but still violated by {:e}",
                sep.value + gamma
            )));
        }
        master.add_scenario(&mixed_scenario(&s.rows, &j)?)?;
        pool.insert(j.clone());
        rec.added = Some(j);
        iterations.push(rec);
    }
    let (x, r) = last.ok_or_else(|| Error::InvalidInput("max_iters must be at least 1".into()))?;
    let sol = package_solution(p, s, x, &r, &mut Evaluator::new(p))?;
    let trace = CgTrace {
        separations_solved: iterations.len(),
        iterations,
        status,
        gamma,
        total_time_s: t0.elapsed().as_secs_f64(),
        separation_time_s: sep_time,
        tightened: master.tightened,
    };
    Ok((sol, trace))
}

/// Solves the padded problem in the requested mode. The trace is present for
/// constraint generation only.
pub fn solve_padded(
    p: &TwoStageProblem,
    s: &SampleSet,
    gamma: f64,
    mode: &PaddingMode,
    time_limit: Option<Duration>,
) -> Result<(SaaSolution, Option<CgTrace>)> {
    let ef = match mode {
        PaddingMode::RhsOnly => build_padded_rhs(p, s, gamma)?,
        PaddingMode::MonotoneShortcut { signs } => build_padded_monotone(p, s, gamma, signs)?,
        PaddingMode::MixedScenarioCg { separation, pins } => {
            let opts = CgOptions {
                separation: *separation,
                pins: pins.clone(),
                time_limit,
                ..CgOptions::default()
            };
            let (sol, trace) = constraint_generation_solve(p, s, gamma, &opts)?;
            return Ok((sol, Some(trace)));
        }
    };
    let r = crate::saa::solve_form(&ef).map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible(format!("padded problem infeasible at gamma = {gamma}")),
        other => other,
    })?;
    let x = ef.x_of(r.primal.as_deref().expect("optimal result has a primal"));
    let sol = package_solution(p, s, x, &r, &mut Evaluator::new(p))?;
    Ok((sol, None))
}
