//! Declarative LP/MILP programs and the HiGHS-backed solver that runs them.
//!
//! Every formulation in the crate is assembled as a [`MathProgram`] and handed
//! to a [`Backend`]. Results are re-verified against the program before they
//! are reported as optimal, so downstream code never trusts a primal vector
//! that violates its own constraints.

use std::ffi::{c_void, CString};
use std::path::Path;
use std::time::{Duration, Instant};

use highs_sys::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for "H(x, xi) <= 0" style checks and primal re-verification.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Relative optimality tolerance handed to the backend.
pub const OPTIMALITY_TOL: f64 = 1e-8;

/// Default MILP time limit (ten minutes).
pub const DEFAULT_MILP_TIME_LIMIT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// A linear or mixed-integer program in row-wise sparse form.
#[derive(Debug, Clone)]
pub struct MathProgram {
    sense: ObjSense,
    obj_offset: f64,
    cost: Vec<f64>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    integer: Vec<bool>,
    row_start: Vec<usize>,
    row_index: Vec<usize>,
    row_value: Vec<f64>,
    row_sense: Vec<RowSense>,
    rhs: Vec<f64>,
}

impl MathProgram {
    pub fn new(sense: ObjSense) -> Self {
        Self {
            sense,
            obj_offset: 0.0,
            cost: Vec::new(),
            col_lower: Vec::new(),
            col_upper: Vec::new(),
            integer: Vec::new(),
            row_start: vec![0],
            row_index: Vec::new(),
            row_value: Vec::new(),
            row_sense: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn sense(&self) -> ObjSense {
        self.sense
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.row_value.len()
    }

    pub fn add_col(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.integer.push(false);
        self.cost.len() - 1
    }

    pub fn add_integer_col(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        let j = self.add_col(lower, upper, cost);
        self.integer[j] = true;
        j
    }

    pub fn add_binary_col(&mut self, cost: f64) -> usize {
        self.add_integer_col(0.0, 1.0, cost)
    }

    pub fn set_integer(&mut self, col: usize, integer: bool) {
        self.integer[col] = integer;
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) {
        self.cost[col] = cost;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.obj_offset = offset;
    }

    pub fn objective_offset(&self) -> f64 {
        self.obj_offset
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn col_bounds(&self, col: usize) -> (f64, f64) {
        (self.col_lower[col], self.col_upper[col])
    }

    pub fn set_col_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.col_lower[col] = lower;
        self.col_upper[col] = upper;
    }

    /// Intersects the current bounds of `col` with `[lower, upper]`.
    pub fn tighten_col_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.col_lower[col] = self.col_lower[col].max(lower);
        self.col_upper[col] = self.col_upper[col].min(upper);
    }

    pub fn is_integer(&self, col: usize) -> bool {
        self.integer[col]
    }

    pub fn is_mip(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Appends a row. Zero coefficients are dropped and repeated columns summed.
    pub fn add_row<I>(&mut self, entries: I, sense: RowSense, rhs: f64) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut row: Vec<(usize, f64)> = entries.into_iter().collect();
        row.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, v) in row {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        for (j, v) in merged {
            if v != 0.0 {
                self.row_index.push(j);
                self.row_value.push(v);
            }
        }
        self.row_start.push(self.row_index.len());
        self.row_sense.push(sense);
        self.rhs.push(rhs);
        self.rhs.len() - 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_start[i], self.row_start[i + 1]);
        self.row_index[s..e]
            .iter()
            .copied()
            .zip(self.row_value[s..e].iter().copied())
    }

    pub fn row_sense(&self, i: usize) -> RowSense {
        self.row_sense[i]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    pub fn set_rhs(&mut self, i: usize, rhs: f64) {
        self.rhs[i] = rhs;
    }

    /// Triplet view `(row, col, coeff)` of the constraint matrix.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_rows()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Same program with all integrality flags cleared.
    pub fn relaxation(&self) -> MathProgram {
        let mut p = self.clone();
        p.integer.iter_mut().for_each(|b| *b = false);
        p
    }

    /// Rejects NaN anywhere and infinities outside variable bounds.
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !v.is_finite();
        if self.cost.iter().copied().any(bad) || bad(self.obj_offset) {
            return Err(Error::InvalidInput("non-finite objective coefficient".into()));
        }
        if self.row_value.iter().copied().any(bad) || self.rhs.iter().copied().any(bad) {
            return Err(Error::InvalidInput("non-finite constraint coefficient or rhs".into()));
        }
        if self.row_index.iter().any(|&j| j >= self.num_cols()) {
            return Err(Error::Dimension("constraint references unknown column".into()));
        }
        for j in 0..self.num_cols() {
            let (l, u) = (self.col_lower[j], self.col_upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("invalid bounds on column {j}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Row activity `a_i^T x`.
    pub fn activity(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * x[j]).sum()
    }

    /// Largest absolute violation of any row, column bound or integrality flag.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_rows() {
            let a = self.activity(i, x);
            let viol = match self.row_sense[i] {
                RowSense::Le => a - self.rhs[i],
                RowSense::Ge => self.rhs[i] - a,
                RowSense::Eq => (a - self.rhs[i]).abs(),
            };
            worst = worst.max(viol);
        }
        for j in 0..self.num_cols() {
            worst = worst.max(self.col_lower[j] - x[j]).max(x[j] - self.col_upper[j]);
            if self.integer[j] {
                worst = worst.max((x[j] - x[j].round()).abs());
            }
        }
        worst
    }

    fn row_bounds(&self, i: usize) -> (f64, f64) {
        match self.row_sense[i] {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs[i]),
            RowSense::Ge => (self.rhs[i], f64::INFINITY),
            RowSense::Eq => (self.rhs[i], self.rhs[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time/iteration limit or numerical trouble; see `diagnostics`.
    Limit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: Option<Vec<f64>>,
    pub objective: f64,
    /// Row duals (LPs only), in the backend's sign convention: for a
    /// minimization, a binding `>=` row has a nonnegative dual.
    pub row_duals: Option<Vec<f64>>,
    pub col_duals: Option<Vec<f64>>,
    pub is_vertex: bool,
    pub lp_relaxation_value: Option<f64>,
    /// Branch-and-bound nodes processed beyond the root (0 when solved at the root).
    pub node_count: Option<u64>,
    pub mip_gap: Option<f64>,
    pub wall_time: Duration,
    pub diagnostics: Option<String>,
}

impl SolveResult {
    fn empty(status: SolveStatus) -> Self {
        Self {
            status,
            primal: None,
            objective: f64::NAN,
            row_duals: None,
            col_duals: None,
            is_vertex: false,
            lp_relaxation_value: None,
            node_count: None,
            mip_gap: None,
            wall_time: Duration::ZERO,
            diagnostics: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Relative gap between the LP relaxation and the integer optimum,
    /// `|lp - ip| / max(|ip|, 1)`.
    pub fn lp_gap(&self) -> Option<f64> {
        let lp = self.lp_relaxation_value?;
        if !self.objective.is_finite() {
            return None;
        }
        Some((lp - self.objective).abs() / self.objective.abs().max(1.0))
    }
}

/// Dual objective implied by the row and column duals of an LP solve.
///
/// Each dual multiplies the bound it is attached to: the lower bound when the
/// dual has the "pushing up" sign and the upper bound otherwise.
pub fn dual_objective(p: &MathProgram, r: &SolveResult) -> Option<f64> {
    let (yr, yc) = (r.row_duals.as_ref()?, r.col_duals.as_ref()?);
    let sign = match p.sense {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };
    let pick = |y: f64, lo: f64, hi: f64| -> f64 {
        if y * sign > 0.0 {
            y * lo
        } else if y * sign < 0.0 {
            y * hi
        } else {
            0.0
        }
    };
    let mut total = p.obj_offset;
    for i in 0..p.num_rows() {
        let (lo, hi) = p.row_bounds(i);
        total += pick(yr[i], lo, hi);
    }
    for j in 0..p.num_cols() {
        total += pick(yc[j], p.col_lower[j], p.col_upper[j]);
    }
    Some(total)
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    /// Drive the backend with simplex so the returned primal is basic.
    pub want_vertex: bool,
    /// Primal feasibility tolerance handed to the backend.
    pub primal_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            want_vertex: true,
            primal_tol: 1e-7,
        }
    }
}

/// A solver backend. Sessions are never shared between concurrent tasks.
pub trait Backend {
    fn name(&self) -> String;
    fn solve_lp(&self, p: &MathProgram, opts: &LpOptions) -> Result<SolveResult>;
    fn solve_milp(&self, p: &MathProgram, time_limit: Duration) -> Result<SolveResult>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> String {
        highs_version()
    }

    fn solve_lp(&self, p: &MathProgram, opts: &LpOptions) -> Result<SolveResult> {
        if p.is_mip() {
            return Err(Error::InvalidInput("solve_lp called with integrality flags".into()));
        }
        let mut s = HighsSession::new(p)?;
        s.configure_lp(opts);
        Ok(s.run())
    }

    fn solve_milp(&self, p: &MathProgram, time_limit: Duration) -> Result<SolveResult> {
        if !p.is_mip() {
            return self.solve_lp(p, &LpOptions::default());
        }
        let relax = self.solve_lp(&p.relaxation(), &LpOptions::default())?;
        let mut s = HighsSession::new(p)?;
        s.set_double("time_limit", time_limit.as_secs_f64());
        s.set_double("mip_rel_gap", OPTIMALITY_TOL);
        s.set_double("mip_feasibility_tolerance", 1e-7);
        let mut r = s.run();
        r.lp_relaxation_value = match relax.status {
            SolveStatus::Optimal => Some(relax.objective),
            SolveStatus::Unbounded => Some(match p.sense {
                ObjSense::Minimize => f64::NEG_INFINITY,
                ObjSense::Maximize => f64::INFINITY,
            }),
            _ => None,
        };
        Ok(r)
    }
}

/// Solves an LP with the default backend.
pub fn solve_lp(p: &MathProgram, want_vertex: bool) -> Result<SolveResult> {
    HighsBackend.solve_lp(
        p,
        &LpOptions {
            want_vertex,
            ..LpOptions::default()
        },
    )
}

/// Solves a MILP with the default backend; falls back to [`solve_lp`] when no
/// column is integer.
pub fn solve_milp(p: &MathProgram, time_limit: Duration) -> Result<SolveResult> {
    HighsBackend.solve_milp(p, time_limit)
}

/// Writes `p` in CPLEX LP text format.
pub fn dump_lp(p: &MathProgram, path: &Path) -> Result<()> {
    let s = HighsSession::new(p)?;
    s.write_model(path)
}

pub fn highs_version() -> String {
    // SAFETY: version queries have no preconditions.
    unsafe {
        format!(
            "HiGHS {}.{}.{}",
            Highs_versionMajor(),
            Highs_versionMinor(),
            Highs_versionPatch()
        )
    }
}

fn cstr(s: &str) -> CString {
    CString::new(s).expect("option names contain no NUL bytes")
}

/// A live HiGHS instance holding one program.
///
/// The session keeps a mirror of the program so that every optimal primal can
/// be re-verified, and so callers can modify coefficients, bounds and costs
/// in place and re-solve from the previous basis.
pub struct HighsSession {
    ptr: *mut c_void,
    mirror: MathProgram,
    simplex: bool,
}

// SAFETY: a HiGHS instance is owned exclusively by its session and may move
// between threads; it is never accessed concurrently.
unsafe impl Send for HighsSession {}

impl Drop for HighsSession {
    fn drop(&mut self) {
        // SAFETY: ptr came from Highs_create and is destroyed exactly once.
        unsafe { Highs_destroy(self.ptr) }
    }
}

impl HighsSession {
    pub fn new(p: &MathProgram) -> Result<Self> {
        p.validate()?;
        // SAFETY: Highs_create has no preconditions.
        let ptr = unsafe { Highs_create() };
        if ptr.is_null() {
            return Err(Error::Solver("Highs_create returned null".into()));
        }
        let mut s = Self {
            ptr,
            mirror: p.clone(),
            simplex: false,
        };
        s.set_bool("output_flag", false);
        s.set_int("threads", 1);
        s.set_double("dual_feasibility_tolerance", 1e-8);
        s.set_double("primal_feasibility_tolerance", 1e-7);
        s.pass_model()?;
        Ok(s)
    }

    pub fn program(&self) -> &MathProgram {
        &self.mirror
    }

    fn configure_lp(&mut self, opts: &LpOptions) {
        if opts.want_vertex {
            self.set_string("solver", "simplex");
            self.simplex = true;
        }
        self.set_double("primal_feasibility_tolerance", opts.primal_tol);
    }

    /// Uses simplex for subsequent solves (basic solutions, warm starts).
    pub fn use_simplex(&mut self) {
        self.set_string("solver", "simplex");
        self.simplex = true;
    }

    pub fn set_primal_tolerance(&mut self, tol: f64) {
        self.set_double("primal_feasibility_tolerance", tol);
    }

    pub fn set_time_limit(&mut self, limit: Duration) {
        self.set_double("time_limit", limit.as_secs_f64());
    }

    fn set_bool(&mut self, name: &str, v: bool) {
        let n = cstr(name);
        // SAFETY: valid instance and NUL-terminated option name.
        unsafe { Highs_setBoolOptionValue(self.ptr, n.as_ptr(), v as HighsInt) };
    }

    fn set_int(&mut self, name: &str, v: i32) {
        let n = cstr(name);
        // SAFETY: as above.
        unsafe { Highs_setIntOptionValue(self.ptr, n.as_ptr(), v as HighsInt) };
    }

    fn set_double(&mut self, name: &str, v: f64) {
        let n = cstr(name);
        // SAFETY: as above.
        unsafe { Highs_setDoubleOptionValue(self.ptr, n.as_ptr(), v) };
    }

    fn set_string(&mut self, name: &str, v: &str) {
        let (n, v) = (cstr(name), cstr(v));
        // SAFETY: as above.
        unsafe { Highs_setStringOptionValue(self.ptr, n.as_ptr(), v.as_ptr()) };
    }

    fn to_highs(&self, v: f64) -> f64 {
        // SAFETY: infinity query on a valid instance.
        let inf = unsafe { Highs_getInfinity(self.ptr) };
        v.clamp(-inf, inf)
    }

    fn pass_model(&mut self) -> Result<()> {
        let p = &self.mirror;
        let lower: Vec<f64> = p.col_lower.iter().map(|&v| self.to_highs(v)).collect();
        let upper: Vec<f64> = p.col_upper.iter().map(|&v| self.to_highs(v)).collect();
        let (mut rlo, mut rup) = (Vec::with_capacity(p.num_rows()), Vec::with_capacity(p.num_rows()));
        for i in 0..p.num_rows() {
            let (l, u) = p.row_bounds(i);
            rlo.push(self.to_highs(l));
            rup.push(self.to_highs(u));
        }
        let start: Vec<HighsInt> = p.row_start[..p.num_rows()].iter().map(|&v| v as HighsInt).collect();
        let index: Vec<HighsInt> = p.row_index.iter().map(|&v| v as HighsInt).collect();
        let integrality: Vec<HighsInt> = p
            .integer
            .iter()
            .map(|&b| if b { VAR_TYPE_INTEGER } else { VAR_TYPE_CONTINUOUS })
            .collect();
        let sense = match p.sense {
            ObjSense::Minimize => OBJECTIVE_SENSE_MINIMIZE,
            ObjSense::Maximize => OBJECTIVE_SENSE_MAXIMIZE,
        };
        let null_int: *const HighsInt = std::ptr::null();
        // SAFETY: all arrays have the lengths HiGHS expects for a row-wise
        // model with num_cols columns, num_rows rows and nnz nonzeros.
        let status = unsafe {
            Highs_passMip(
                self.ptr,
                p.num_cols() as HighsInt,
                p.num_rows() as HighsInt,
                p.num_nonzeros() as HighsInt,
                MATRIX_FORMAT_ROW_WISE,
                sense,
                p.obj_offset,
                p.cost.as_ptr(),
                lower.as_ptr(),
                upper.as_ptr(),
                rlo.as_ptr(),
                rup.as_ptr(),
                if start.is_empty() { null_int } else { start.as_ptr() },
                if index.is_empty() { null_int } else { index.as_ptr() },
                if p.row_value.is_empty() { std::ptr::null() } else { p.row_value.as_ptr() },
                if p.is_mip() { integrality.as_ptr() } else { null_int },
            )
        };
        if status == STATUS_ERROR {
            return Err(Error::Solver("HiGHS rejected the model".into()));
        }
        Ok(())
    }

    /// Changes coefficient `(row, col)`, keeping the current basis.
    pub fn change_coeff(&mut self, row: usize, col: usize, value: f64) {
        let p = &mut self.mirror;
        let (s, e) = (p.row_start[row], p.row_start[row + 1]);
        match p.row_index[s..e].iter().position(|&j| j == col) {
            Some(k) => p.row_value[s + k] = value,
            None => {
                p.row_index.insert(e, col);
                p.row_value.insert(e, value);
                for v in &mut p.row_start[row + 1..] {
                    *v += 1;
                }
            }
        }
        // SAFETY: indices are within the model passed to this instance.
        unsafe { Highs_changeCoeff(self.ptr, row as HighsInt, col as HighsInt, value) };
    }

    pub fn change_rhs(&mut self, row: usize, rhs: f64) {
        self.mirror.rhs[row] = rhs;
        let (l, u) = self.mirror.row_bounds(row);
        let (l, u) = (self.to_highs(l), self.to_highs(u));
        // SAFETY: as above.
        unsafe { Highs_changeRowBounds(self.ptr, row as HighsInt, l, u) };
    }

    pub fn change_cost(&mut self, col: usize, cost: f64) {
        self.mirror.cost[col] = cost;
        // SAFETY: as above.
        unsafe { Highs_changeColCost(self.ptr, col as HighsInt, cost) };
    }

    pub fn change_col_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.mirror.col_lower[col] = lower;
        self.mirror.col_upper[col] = upper;
        let (l, u) = (self.to_highs(lower), self.to_highs(upper));
        // SAFETY: as above.
        unsafe { Highs_changeColBounds(self.ptr, col as HighsInt, l, u) };
    }

    /// Appends the columns and rows of `extra` that lie beyond the current
    /// model. `extra` must extend the mirrored program (same leading columns
    /// and rows, unchanged); only the new tail is sent to the backend.
    pub fn extend_to(&mut self, extra: &MathProgram) -> Result<()> {
        let (nc, nr) = (self.mirror.num_cols(), self.mirror.num_rows());
        if extra.num_cols() < nc || extra.num_rows() < nr {
            return Err(Error::InvalidInput("extend_to would shrink the model".into()));
        }
        extra.validate()?;
        let new_cols = extra.num_cols() - nc;
        if new_cols > 0 {
            let cost = &extra.cost[nc..];
            let lo: Vec<f64> = extra.col_lower[nc..].iter().map(|&v| self.to_highs(v)).collect();
            let up: Vec<f64> = extra.col_upper[nc..].iter().map(|&v| self.to_highs(v)).collect();
            let starts = vec![0 as HighsInt; new_cols];
            // SAFETY: new columns carry no entries; rows are added below.
            unsafe {
                Highs_addCols(
                    self.ptr,
                    new_cols as HighsInt,
                    cost.as_ptr(),
                    lo.as_ptr(),
                    up.as_ptr(),
                    0,
                    starts.as_ptr(),
                    std::ptr::null(),
                    std::ptr::null(),
                )
            };
            for j in nc..extra.num_cols() {
                if extra.integer[j] {
                    // SAFETY: valid column index.
                    unsafe { Highs_changeColIntegrality(self.ptr, j as HighsInt, VAR_TYPE_INTEGER) };
                }
            }
        }
        let new_rows = extra.num_rows() - nr;
        if new_rows > 0 {
            let (mut lo, mut up, mut starts, mut index, mut value) = (vec![], vec![], vec![], vec![], vec![]);
            for i in nr..extra.num_rows() {
                let (l, u) = extra.row_bounds(i);
                lo.push(self.to_highs(l));
                up.push(self.to_highs(u));
                starts.push(index.len() as HighsInt);
                for (j, v) in extra.row(i) {
                    index.push(j as HighsInt);
                    value.push(v);
                }
            }
            // SAFETY: row-wise arrays sized consistently.
            unsafe {
                Highs_addRows(
                    self.ptr,
                    new_rows as HighsInt,
                    lo.as_ptr(),
                    up.as_ptr(),
                    index.len() as HighsInt,
                    starts.as_ptr(),
                    index.as_ptr(),
                    value.as_ptr(),
                )
            };
        }
        self.mirror = extra.clone();
        Ok(())
    }

    pub fn write_model(&self, path: &Path) -> Result<()> {
        let p = cstr(&path.to_string_lossy());
        // SAFETY: valid instance and path string.
        let status = unsafe { Highs_writeModel(self.ptr, p.as_ptr()) };
        if status == STATUS_ERROR {
            return Err(Error::Solver(format!("could not write {}", path.display())));
        }
        Ok(())
    }

    fn info_i64(&self, name: &str) -> Option<i64> {
        let n = cstr(name);
        let mut v: i64 = 0;
        // SAFETY: valid instance, name and out-pointer.
        let st = unsafe { Highs_getInt64InfoValue(self.ptr, n.as_ptr(), &mut v) };
        (st == STATUS_OK).then_some(v)
    }

    fn info_int(&self, name: &str) -> Option<i64> {
        let n = cstr(name);
        let mut v: HighsInt = 0;
        // SAFETY: as above.
        let st = unsafe { Highs_getIntInfoValue(self.ptr, n.as_ptr(), &mut v) };
        (st == STATUS_OK).then_some(v as i64)
    }

    fn info_f64(&self, name: &str) -> Option<f64> {
        let n = cstr(name);
        let mut v: f64 = 0.0;
        // SAFETY: as above.
        let st = unsafe { Highs_getDoubleInfoValue(self.ptr, n.as_ptr(), &mut v) };
        (st == STATUS_OK).then_some(v)
    }

    /// Solves the current model (warm-started from the previous basis, if any).
    pub fn run(&mut self) -> SolveResult {
        let t0 = Instant::now();
        // SAFETY: valid instance.
        let run_status = unsafe { Highs_run(self.ptr) };
        let elapsed = t0.elapsed();
        // SAFETY: valid instance.
        let model_status = unsafe { Highs_getModelStatus(self.ptr) };
        let status = match model_status {
            MODEL_STATUS_OPTIMAL => SolveStatus::Optimal,
            MODEL_STATUS_MODEL_EMPTY => SolveStatus::Optimal,
            MODEL_STATUS_INFEASIBLE => SolveStatus::Infeasible,
            MODEL_STATUS_UNBOUNDED => SolveStatus::Unbounded,
            MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => self.resolve_ambiguous(),
            _ => SolveStatus::Limit,
        };
        let mip = self.mirror.is_mip();
        let mut r = SolveResult::empty(status);
        r.wall_time = elapsed;
        if run_status == STATUS_ERROR && status == SolveStatus::Limit {
            r.diagnostics = Some(format!("HiGHS run error, model status {model_status}"));
        }

        let has_primal = self
            .info_int("primal_solution_status")
            .is_some_and(|s| s == SOLUTION_STATUS_FEASIBLE as i64);
        if matches!(status, SolveStatus::Optimal | SolveStatus::Limit) && (has_primal || status == SolveStatus::Optimal) {
            let p = &self.mirror;
            let (nc, nr) = (p.num_cols(), p.num_rows());
            let (mut cv, mut cd, mut rv, mut rd) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nr], vec![0.0; nr]);
            // SAFETY: buffers sized to the model dimensions.
            unsafe {
                Highs_getSolution(self.ptr, cv.as_mut_ptr(), cd.as_mut_ptr(), rv.as_mut_ptr(), rd.as_mut_ptr())
            };
            if mip {
                for j in 0..nc {
                    if p.integer[j] {
                        cv[j] = cv[j].round();
                    }
                }
            }
            // SAFETY: valid instance.
            r.objective = if model_status == MODEL_STATUS_MODEL_EMPTY {
                p.objective_value(&cv)
            } else {
                unsafe { Highs_getObjectiveValue(self.ptr) }
            };
            let viol = p.max_violation(&cv);
            if viol > FEASIBILITY_TOL * (1.0 + max_abs_rhs(p)).min(10.0) {
                r.status = SolveStatus::Limit;
                r.diagnostics = Some(format!("returned primal violates constraints by {viol:e}"));
            }
            if !mip {
                r.row_duals = Some(rd);
                r.col_duals = Some(cd);
                r.is_vertex = self.simplex && self.info_int("basis_validity") == Some(1);
            }
            r.primal = Some(cv);
        }
        if mip {
            r.node_count = self.info_i64("mip_node_count").map(|v| (v - 1).max(0) as u64);
            r.mip_gap = self.info_f64("mip_gap");
            if status == SolveStatus::Limit && r.primal.is_none() {
                r.diagnostics.get_or_insert_with(|| "limit reached without incumbent".into());
            }
        }
        r
    }

    /// HiGHS may report "unbounded or infeasible"; settle it by re-solving
    /// with presolve disabled.
    fn resolve_ambiguous(&mut self) -> SolveStatus {
        self.set_string("presolve", "off");
        // SAFETY: valid instance.
        let status = unsafe {
            Highs_run(self.ptr);
            Highs_getModelStatus(self.ptr)
        };
        self.set_string("presolve", "choose");
        match status {
            MODEL_STATUS_INFEASIBLE => SolveStatus::Infeasible,
            MODEL_STATUS_UNBOUNDED => SolveStatus::Unbounded,
            MODEL_STATUS_OPTIMAL => SolveStatus::Optimal,
            _ => SolveStatus::Limit,
        }
    }
}

fn max_abs_rhs(p: &MathProgram) -> f64 {
    p.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-7 * (1.0 + b.abs())
    }

    #[test]
    fn single_bound_lp() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_col(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row([(x, 1.0)], RowSense::Ge, 3.0);
        let r = solve_lp(&p, true).unwrap();
        assert!(r.is_optimal());
        assert!(approx(r.primal.unwrap()[0], 3.0));
        assert!(approx(r.objective, 3.0));
        assert!(r.is_vertex);
    }

    #[test]
    fn infeasible_lp() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_col(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row([(x, 1.0)], RowSense::Ge, 1.0);
        p.add_row([(x, 1.0)], RowSense::Le, 0.0);
        assert_eq!(solve_lp(&p, true).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_col(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row([(x, 1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&p, true).unwrap().status, SolveStatus::Unbounded);
    }

    /// Vertices of {x >= 0, y >= 0, x + 2y <= 4, 3x + y <= 6} by pairwise
    /// intersection of the four boundary lines.
    fn enumerate_vertices() -> Vec<(f64, f64)> {
        let lines = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 2.0, 4.0), (3.0, 1.0, 6.0)];
        let mut out = Vec::new();
        for a in 0..lines.len() {
            for b in a + 1..lines.len() {
                let (a1, b1, c1) = lines[a];
                let (a2, b2, c2) = lines[b];
                let det: f64 = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (c1 * b2 - c2 * b1) / det;
                let y = (a1 * c2 - a2 * c1) / det;
                if x >= -1e-12 && y >= -1e-12 && x + 2.0 * y <= 4.0 + 1e-12 && 3.0 * x + y <= 6.0 + 1e-12 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn two_var_lp_matches_vertex_enumeration() {
        let verts = enumerate_vertices();
        for (cx, cy) in [(-1.0, -1.0), (-3.0, -1.0), (-1.0, -4.0), (2.0, 1.0)] {
            let best = verts
                .iter()
                .map(|&(x, y)| cx * x + cy * y)
                .fold(f64::INFINITY, f64::min);
            let mut p = MathProgram::new(ObjSense::Minimize);
            let x = p.add_col(0.0, f64::INFINITY, cx);
            let y = p.add_col(0.0, f64::INFINITY, cy);
            p.add_row([(x, 1.0), (y, 2.0)], RowSense::Le, 4.0);
            p.add_row([(x, 3.0), (y, 1.0)], RowSense::Le, 6.0);
            let r = solve_lp(&p, true).unwrap();
            assert!(approx(r.objective, best), "{} vs {best}", r.objective);
            let s = r.primal.clone().unwrap();
            assert!(verts.iter().any(|&(vx, vy)| approx(s[0], vx) && approx(s[1], vy)));
            let dual = dual_objective(&p, &r).unwrap();
            assert!((dual - r.objective).abs() <= 1e-6 * (1.0 + r.objective.abs()));
        }
    }

    #[test]
    fn integer_ceiling() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_integer_col(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row([(x, 1.0)], RowSense::Ge, 2.3);
        let r = solve_milp(&p, Duration::from_secs(10)).unwrap();
        assert!(r.is_optimal());
        assert_eq!(r.primal.unwrap()[0], 3.0);
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let (w, v, cap) = ([3.0, 4.0, 2.0], [4.0, 5.0, 3.0], 6.0);
        let mut best = 0.0f64;
        for mask in 0..8u32 {
            let (mut tw, mut tv) = (0.0, 0.0);
            for i in 0..3 {
                if mask & (1 << i) != 0 {
                    tw += w[i];
                    tv += v[i];
                }
            }
            if tw <= cap {
                best = best.max(tv);
            }
        }
        let mut p = MathProgram::new(ObjSense::Maximize);
        let cols: Vec<usize> = v.iter().map(|&vi| p.add_binary_col(vi)).collect();
        p.add_row(cols.iter().zip(w).map(|(&c, wi)| (c, wi)), RowSense::Le, cap);
        let r = solve_milp(&p, Duration::from_secs(10)).unwrap();
        assert!(r.is_optimal());
        assert!(approx(r.objective, best));
        assert!(r.lp_relaxation_value.unwrap() >= best - 1e-9);
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_integer_col(0.0, 10.0, 1.0);
        let y = p.add_integer_col(0.0, 10.0, 2.0);
        p.add_row([(x, 1.0), (y, 1.0)], RowSense::Ge, 4.0);
        let r = solve_milp(&p, Duration::from_secs(10)).unwrap();
        assert!(r.is_optimal());
        assert_eq!(r.node_count, Some(0));
        assert!(r.lp_gap().unwrap() <= 1e-9);
    }

    #[test]
    fn warm_resolve_tracks_changes() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_col(0.0, f64::INFINITY, 1.0);
        let y = p.add_col(0.0, f64::INFINITY, 1.0);
        let r0 = p.add_row([(x, 1.0), (y, 2.0)], RowSense::Ge, 4.0);
        let mut s = HighsSession::new(&p).unwrap();
        s.use_simplex();
        assert!(approx(s.run().objective, 2.0));
        s.change_coeff(r0, y, 0.5);
        assert!(approx(s.run().objective, 4.0));
        s.change_rhs(r0, 8.0);
        assert!(approx(s.run().objective, 8.0));
        s.change_cost(x, 0.1);
        assert!(approx(s.run().objective, 0.8));
    }

    #[test]
    fn rejects_nan() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        p.add_col(0.0, 1.0, f64::NAN);
        assert!(solve_lp(&p, true).is_err());
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let mut p = MathProgram::new(ObjSense::Minimize);
        let x = p.add_col(0.0, 10.0, 1.0);
        p.add_row([(x, 1.0), (x, 1.0)], RowSense::Ge, 4.0);
        assert_eq!(p.row(0).collect::<Vec<_>>(), vec![(x, 2.0)]);
        assert!(approx(solve_lp(&p, true).unwrap().objective, 2.0));
    }
}
