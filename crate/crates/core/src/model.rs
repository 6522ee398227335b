//! Two-stage stochastic LPs with a random and a deterministic second-stage block.
//!
//! Conventions: `X = {x : A x <= b}`; random rows `W(xi) y >= h(xi) - T(xi) x`;
//! deterministic rows `D y >= d - C x`. Scenario data are affine in `xi`: every
//! map matrix carries `d_dim + 1` columns, the last one multiplying an implicit
//! constant coordinate equal to one.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver_backend::{solve_lp, MathProgram, ObjSense, RowSense, SolveStatus, FEASIBILITY_TOL};

/// Dense row-major matrix. Serialized as a list of rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// A matrix with zero rows forgets its width when serialized; restore it.
    fn fix_empty_width(&mut self, cols: usize) {
        if self.rows == 0 {
            self.cols = cols;
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sparse matrix used for the scenario map. Serialized densely when small and
/// as `{"rows", "cols", "triplets": [[i, j, v], ...]}` otherwise; both forms
/// are accepted on input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

static ZERO: f64 = 0.0;

/// Above this many cells a sparse matrix is written as triplets.
const DENSE_WRITE_LIMIT: usize = 4096;

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Nonzeros as `(row, col, value)` in row-major order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().filter(|(_, &v)| v != 0.0).map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn row_nonzeros(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .range((i, 0)..(i + 1, 0))
            .filter(|(_, &v)| v != 0.0)
            .map(|(&(_, j), &v)| (j, v))
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.nonzeros() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn from_dense(m: &Matrix) -> Self {
        let mut s = Self::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    s.entries.insert((i, j), v);
                }
            }
        }
        s
    }

    fn fix_empty_width(&mut self, cols: usize) {
        if self.rows == 0 {
            self.cols = cols;
        }
    }
}

impl std::ops::Index<(usize, usize)> for SparseMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        self.entries.get(&ij).unwrap_or(&ZERO)
    }
}

impl std::ops::IndexMut<(usize, usize)> for SparseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.entries.entry((i, j)).or_insert(0.0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SparseRepr {
    Dense(Vec<Vec<f64>>),
    Triplets {
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
}

impl Serialize for SparseMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = if self.rows * self.cols <= DENSE_WRITE_LIMIT {
            SparseRepr::Dense(self.to_dense().to_rows())
        } else {
            SparseRepr::Triplets {
                rows: self.rows,
                cols: self.cols,
                triplets: self.nonzeros().collect(),
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SparseRepr::deserialize(d)? {
            SparseRepr::Dense(rows) => Matrix::from_rows(&rows)
                .map(|m| SparseMatrix::from_dense(&m))
                .map_err(serde::de::Error::custom),
            SparseRepr::Triplets { rows, cols, triplets } => {
                let mut m = SparseMatrix::zeros(rows, cols);
                for (i, j, v) in triplets {
                    if i >= rows || j >= cols {
                        return Err(serde::de::Error::custom(format!("triplet ({i}, {j}) out of bounds")));
                    }
                    m[(i, j)] += v;
                }
                Ok(m)
            }
        }
    }
}

/// First-stage feasible set `{x : A x <= b}` with an optional integrality mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralSet {
    #[serde(rename = "A")]
    pub a: Matrix,
    pub b: Vec<f64>,
    #[serde(default)]
    pub integrality: Vec<usize>,
}

impl PolyhedralSet {
    pub fn nonnegative_orthant(n1: usize) -> Self {
        let mut a = Matrix::zeros(n1, n1);
        for i in 0..n1 {
            a[(i, i)] = -1.0;
        }
        Self {
            a,
            b: vec![0.0; n1],
            integrality: Vec::new(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        (0..self.a.rows()).all(|i| dot(self.a.row(i), x) <= self.b[i] + tol)
            && self.integrality.iter().all(|&k| (x[k] - x[k].round()).abs() <= tol)
    }
}

/// Deterministic second-stage rows `D y >= d - C x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSecondStage {
    #[serde(rename = "D")]
    pub dmat: Matrix,
    #[serde(rename = "C")]
    pub cmat: Matrix,
    pub d: Vec<f64>,
}

impl DeterministicSecondStage {
    pub fn empty(n1: usize, n2: usize) -> Self {
        Self {
            dmat: Matrix::zeros(0, n2),
            cmat: Matrix::zeros(0, n1),
            d: Vec::new(),
        }
    }

    /// `y >= 0`.
    pub fn nonnegative(n1: usize, n2: usize) -> Self {
        Self {
            dmat: Matrix::identity(n2),
            cmat: Matrix::zeros(n2, n1),
            d: vec![0.0; n2],
        }
    }

    pub fn rows(&self) -> usize {
        self.d.len()
    }

    /// Right-hand side `d - C x`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|i| self.d[i] - dot(self.cmat.row(i), x)).collect()
    }
}

/// One realization of the random second-stage data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRealization {
    pub q: Vec<f64>,
    pub wbar: Matrix,
    pub tbar: Matrix,
    pub hbar: Vec<f64>,
}

impl ScenarioRealization {
    /// `h(xi) - T(xi) x`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hbar.len())
            .map(|p| self.hbar[p] - dot(self.tbar.row(p), x))
            .collect()
    }
}

/// Affine scenario map. Column `k` of `T(xi)` is `Tk[k] * [xi; 1]`, column `k`
/// of `W(xi)` is `Wk[k] * [xi; 1]`, `h(xi) = Hbar * [xi; 1]`, `q(xi) = q_map * [xi; 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScenarioMap {
    #[serde(rename = "Tk")]
    pub tk: Vec<SparseMatrix>,
    #[serde(rename = "Wk")]
    pub wk: Vec<SparseMatrix>,
    #[serde(rename = "Hbar")]
    pub hbar: SparseMatrix,
    pub q_map: SparseMatrix,
}

/// Which block a compiled map term feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    W,
    T,
    H,
    Q,
}

/// Nonzero `(row, col, coord) -> value` of a scenario map. For `H` the column
/// is zero; for `Q` the row is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapTerm {
    pub block: Block,
    pub row: usize,
    pub col: usize,
    pub coord: usize,
    pub value: f64,
}

impl LinearScenarioMap {
    pub fn zeros(random_rows: usize, n1: usize, n2: usize, d_dim: usize) -> Self {
        Self {
            tk: vec![SparseMatrix::zeros(random_rows, d_dim + 1); n1],
            wk: vec![SparseMatrix::zeros(random_rows, d_dim + 1); n2],
            hbar: SparseMatrix::zeros(random_rows, d_dim + 1),
            q_map: SparseMatrix::zeros(n2, d_dim + 1),
        }
    }

    pub fn random_rows(&self) -> usize {
        self.hbar.rows()
    }

    /// Width of every map matrix (`d_dim + 1`).
    pub fn width(&self) -> usize {
        self.hbar.cols()
    }

    pub fn terms(&self) -> Vec<MapTerm> {
        let mut out = Vec::new();
        for (k, m) in self.wk.iter().enumerate() {
            out.extend(m.nonzeros().map(|(r, c, v)| MapTerm { block: Block::W, row: r, col: k, coord: c, value: v }));
        }
        for (k, m) in self.tk.iter().enumerate() {
            out.extend(m.nonzeros().map(|(r, c, v)| MapTerm { block: Block::T, row: r, col: k, coord: c, value: v }));
        }
        out.extend(self.hbar.nonzeros().map(|(r, c, v)| MapTerm { block: Block::H, row: r, col: 0, coord: c, value: v }));
        out.extend(self.q_map.nonzeros().map(|(k, c, v)| MapTerm { block: Block::Q, row: 0, col: k, coord: c, value: v }));
        out
    }

    /// True when every `Wk` is zero outside the constant column, i.e. fixed
    /// recourse. With `pinned`, coordinates flagged true also count as constant.
    pub fn fixed_recourse_given(&self, pinned: &[bool]) -> bool {
        Self::constant_given(&self.wk, self.width() - 1, pinned)
    }

    /// Same test for the technology matrix `T`.
    pub fn fixed_tech_given(&self, pinned: &[bool]) -> bool {
        Self::constant_given(&self.tk, self.width() - 1, pinned)
    }

    fn constant_given(ms: &[SparseMatrix], constant: usize, pinned: &[bool]) -> bool {
        ms.iter()
            .all(|m| m.nonzeros().all(|(_, q, _)| q == constant || pinned.get(q) == Some(&true)))
    }
}

/// Sparse, precompiled form of a [`LinearScenarioMap`] for repeated realization.
#[derive(Debug, Clone)]
pub struct CompiledMap {
    pub random_rows: usize,
    pub n1: usize,
    pub n2: usize,
    pub d_dim: usize,
    pub terms: Vec<MapTerm>,
}

impl CompiledMap {
    pub fn new(map: &LinearScenarioMap) -> Self {
        Self {
            random_rows: map.random_rows(),
            n1: map.tk.len(),
            n2: map.wk.len(),
            d_dim: map.width() - 1,
            terms: map.terms(),
        }
    }

    fn coord_value(&self, xi: &[f64], q: usize) -> f64 {
        if q == self.d_dim {
            1.0
        } else {
            xi[q]
        }
    }

    pub fn realize(&self, xi: &[f64]) -> ScenarioRealization {
        let r = self.random_rows;
        let mut out = ScenarioRealization {
            q: vec![0.0; self.n2],
            wbar: Matrix::zeros(r, self.n2),
            tbar: Matrix::zeros(r, self.n1),
            hbar: vec![0.0; r],
        };
        for t in &self.terms {
            let v = t.value * self.coord_value(xi, t.coord);
            match t.block {
                Block::W => out.wbar[(t.row, t.col)] += v,
                Block::T => out.tbar[(t.row, t.col)] += v,
                Block::H => out.hbar[t.row] += v,
                Block::Q => out.q[t.col] += v,
            }
        }
        out
    }
}

/// Realization function for scenario data that is not affine in `xi`.
pub type OpaqueGenerator = Arc<dyn Fn(&[f64]) -> ScenarioRealization + Send + Sync>;

#[derive(Clone)]
pub enum ScenarioSource {
    Linear(LinearScenarioMap),
    /// Arbitrary realization function; supports standard SAA and evaluation
    /// but not the separation MILPs.
    Opaque {
        generator: OpaqueGenerator,
        random_rows: usize,
    },
}

impl fmt::Debug for ScenarioSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioSource::Linear(m) => f.debug_tuple("Linear").field(m).finish(),
            ScenarioSource::Opaque { random_rows, .. } => {
                f.debug_struct("Opaque").field("random_rows", random_rows).finish_non_exhaustive()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoStageProblem {
    pub c: Vec<f64>,
    pub x_set: PolyhedralSet,
    pub det: DeterministicSecondStage,
    pub scenario: ScenarioSource,
    pub d_dim: usize,
    pub n2: usize,
    pub fixed_recourse: bool,
    compiled: Option<Arc<CompiledMap>>,
}

impl TwoStageProblem {
    pub fn new(
        c: Vec<f64>,
        x_set: PolyhedralSet,
        det: DeterministicSecondStage,
        map: LinearScenarioMap,
        d_dim: usize,
    ) -> Result<Self> {
        let n2 = map.wk.len();
        let fixed = map.fixed_recourse_given(&[]);
        let mut p = Self {
            c,
            x_set,
            det,
            compiled: Some(Arc::new(CompiledMap::new(&map))),
            scenario: ScenarioSource::Linear(map),
            d_dim,
            n2,
            fixed_recourse: fixed,
        };
        p.fix_widths();
        p.check_dimensions()?;
        Ok(p)
    }

    pub fn with_opaque(
        c: Vec<f64>,
        x_set: PolyhedralSet,
        det: DeterministicSecondStage,
        generator: OpaqueGenerator,
        random_rows: usize,
        n2: usize,
        d_dim: usize,
        fixed_recourse: bool,
    ) -> Result<Self> {
        let mut p = Self {
            c,
            x_set,
            det,
            scenario: ScenarioSource::Opaque { generator, random_rows },
            d_dim,
            n2,
            fixed_recourse,
            compiled: None,
        };
        p.fix_widths();
        p.check_dimensions()?;
        Ok(p)
    }

    fn fix_widths(&mut self) {
        let n1 = self.c.len();
        self.x_set.a.fix_empty_width(n1);
        self.det.dmat.fix_empty_width(self.n2);
        self.det.cmat.fix_empty_width(n1);
    }

    pub fn n1(&self) -> usize {
        self.c.len()
    }

    pub fn m1(&self) -> usize {
        self.x_set.b.len()
    }

    pub fn random_rows(&self) -> usize {
        match &self.scenario {
            ScenarioSource::Linear(m) => m.random_rows(),
            ScenarioSource::Opaque { random_rows, .. } => *random_rows,
        }
    }

    /// Total second-stage rows `m2 = |I| + rows(D)`.
    pub fn m2(&self) -> usize {
        self.random_rows() + self.det.rows()
    }

    pub fn linear_map(&self) -> Option<&LinearScenarioMap> {
        match &self.scenario {
            ScenarioSource::Linear(m) => Some(m),
            ScenarioSource::Opaque { .. } => None,
        }
    }

    pub fn compiled_map(&self) -> Option<&CompiledMap> {
        self.compiled.as_deref()
    }

    pub fn realize(&self, xi: &[f64]) -> Result<ScenarioRealization> {
        if xi.len() != self.d_dim {
            return Err(Error::Dimension(format!("xi has length {}, expected {}", xi.len(), self.d_dim)));
        }
        Ok(match &self.scenario {
            ScenarioSource::Linear(_) => self.compiled.as_ref().expect("compiled with linear map").realize(xi),
            ScenarioSource::Opaque { generator, .. } => generator(xi),
        })
    }

    /// Collects every dimension inconsistency.
    pub fn dimension_issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (n1, n2) = (self.n1(), self.n2);
        if n1 == 0 {
            out.push("n1 must be at least 1".into());
        }
        let x = &self.x_set;
        if x.a.rows() != x.b.len() {
            out.push(format!("A has {} rows but b has length {}", x.a.rows(), x.b.len()));
        }
        if x.a.rows() > 0 && x.a.cols() != n1 {
            out.push(format!("A has {} columns, expected n1 = {n1}", x.a.cols()));
        }
        if let Some(&k) = x.integrality.iter().find(|&&k| k >= n1) {
            out.push(format!("integrality index {k} out of range"));
        }
        let det = &self.det;
        if det.dmat.rows() != det.d.len() || det.cmat.rows() != det.d.len() {
            out.push(format!(
                "D, C, d row counts disagree ({}, {}, {})",
                det.dmat.rows(),
                det.cmat.rows(),
                det.d.len()
            ));
        }
        if det.dmat.rows() > 0 && det.dmat.cols() != n2 {
            out.push(format!("D has {} columns, expected n2 = {n2}", det.dmat.cols()));
        }
        if det.cmat.rows() > 0 && det.cmat.cols() != n1 {
            out.push(format!("C has {} columns, expected n1 = {n1}", det.cmat.cols()));
        }
        if let ScenarioSource::Linear(m) = &self.scenario {
            let (r, w) = (m.random_rows(), self.d_dim + 1);
            if m.tk.len() != n1 {
                out.push(format!("Tk has {} matrices, expected n1 = {n1}", m.tk.len()));
            }
            if m.wk.len() != n2 {
                out.push(format!("Wk has {} matrices, expected n2 = {n2}", m.wk.len()));
            }
            let shape_ok = |mm: &SparseMatrix, rows: usize| mm.rows() == rows && (mm.cols() == w || rows == 0);
            if !shape_ok(&m.hbar, r) {
                out.push(format!("Hbar must be {r} x {w}"));
            }
            if m.tk.iter().chain(&m.wk).any(|mm| !shape_ok(mm, r)) {
                out.push(format!("every Tk/Wk matrix must be {r} x {w}"));
            }
            if !shape_ok(&m.q_map, n2) {
                out.push(format!("q_map must be {n2} x {w}"));
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            out.push("c contains non-finite values".into());
        }
        out
    }

    fn check_dimensions(&self) -> Result<()> {
        match self.dimension_issues().into_iter().next() {
            Some(msg) => Err(Error::Dimension(msg)),
            None => Ok(()),
        }
    }

    pub fn to_file(&self) -> Result<ProblemFile> {
        let map = self
            .linear_map()
            .ok_or_else(|| Error::InvalidInput("opaque scenario generators cannot be serialized".into()))?;
        Ok(ProblemFile {
            c: self.c.clone(),
            a: self.x_set.a.clone(),
            b: self.x_set.b.clone(),
            integrality: self.x_set.integrality.clone(),
            dmat: self.det.dmat.clone(),
            cmat: self.det.cmat.clone(),
            d: self.det.d.clone(),
            tk: map.tk.clone(),
            wk: map.wk.clone(),
            hbar: map.hbar.clone(),
            q_map: map.q_map.clone(),
            d_dim: self.d_dim,
            fixed_recourse: self.fixed_recourse,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file()?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ProblemFile>(s)?.into_problem()
    }
}

/// On-disk instance schema. Matrices are row-major lists of rows; every map
/// matrix (`Tk[k]`, `Wk[k]`, `Hbar`, `q_map`) has `d_dim + 1` columns, the last
/// being the constant term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Matrix,
    pub b: Vec<f64>,
    #[serde(default)]
    pub integrality: Vec<usize>,
    #[serde(rename = "D")]
    pub dmat: Matrix,
    #[serde(rename = "C")]
    pub cmat: Matrix,
    pub d: Vec<f64>,
    #[serde(rename = "Tk")]
    pub tk: Vec<SparseMatrix>,
    #[serde(rename = "Wk")]
    pub wk: Vec<SparseMatrix>,
    #[serde(rename = "Hbar")]
    pub hbar: SparseMatrix,
    pub q_map: SparseMatrix,
    pub d_dim: usize,
    #[serde(default)]
    pub fixed_recourse: bool,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<TwoStageProblem> {
        let n2 = self.wk.len();
        let mut map = LinearScenarioMap {
            tk: self.tk,
            wk: self.wk,
            hbar: self.hbar,
            q_map: self.q_map,
        };
        for m in map.tk.iter_mut().chain(map.wk.iter_mut()) {
            m.fix_empty_width(self.d_dim + 1);
        }
        map.hbar.fix_empty_width(self.d_dim + 1);
        map.q_map.fix_empty_width(self.d_dim + 1);
        let p = TwoStageProblem::new(
            self.c,
            PolyhedralSet {
                a: self.a,
                b: self.b,
                integrality: self.integrality,
            },
            DeterministicSecondStage {
                dmat: self.dmat,
                cmat: self.cmat,
                d: self.d,
            },
            map,
            self.d_dim,
        )?;
        if self.fixed_recourse && !p.fixed_recourse {
            return Err(Error::InvalidInput("fixed_recourse declared but Wk depends on xi".into()));
        }
        debug_assert_eq!(p.n2, n2);
        Ok(p)
    }
}

/// Assembles `(q, W, T, h)` at `xi`.
pub fn realize_scenario(map: &LinearScenarioMap, xi: &[f64]) -> Result<ScenarioRealization> {
    if xi.len() + 1 != map.width() {
        return Err(Error::Dimension(format!("xi has length {}, map expects {}", xi.len(), map.width() - 1)));
    }
    Ok(CompiledMap::new(map).realize(xi))
}

/// Coordinate `q` of the result is coordinate `q` of `sample[j[q]]`
/// (indices are zero-based).
pub fn mixed_scenario(sample: &[Vec<f64>], j: &[usize]) -> Result<Vec<f64>> {
    let d = sample.first().map_or(0, Vec::len);
    if j.len() != d {
        return Err(Error::Dimension(format!("index vector has length {}, expected {d}", j.len())));
    }
    j.iter()
        .enumerate()
        .map(|(q, &jq)| {
            sample
                .get(jq)
                .map(|row| row[q])
                .ok_or_else(|| Error::InvalidInput(format!("scenario index {jq} out of range")))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationIssue {
    pub fatal: bool,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ValidationIssue>,
    /// Interior point of X used for the deterministic-block probe.
    pub probe_point: Option<Vec<f64>>,
}

impl ValidationReport {
    pub fn has_issue(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.message.contains(needle))
    }
}

/// Checks dimensions, `m2 >= n2 + 1`, nonemptiness of X and feasibility of the
/// deterministic block at a Chebyshev-style center of X.
pub fn validate_problem(p: &TwoStageProblem) -> ValidationReport {
    let mut issues: Vec<ValidationIssue> = p
        .dimension_issues()
        .into_iter()
        .map(|message| ValidationIssue { fatal: true, message })
        .collect();
    let mut probe_point = None;
    if p.m2() < p.n2 + 1 {
        issues.push(ValidationIssue {
            fatal: false,
            message: format!("assumption m2 >= n2 + 1 violated (m2 = {}, n2 = {})", p.m2(), p.n2),
        });
    }
    if issues.iter().all(|i| !i.fatal) {
        match chebyshev_center(&p.x_set, p.n1()) {
            Ok(Some(x0)) => {
                if !det_block_feasible(p, &x0) {
                    issues.push(ValidationIssue {
                        fatal: true,
                        message: "deterministic second-stage block is infeasible at the center of X".into(),
                    });
                }
                probe_point = Some(x0);
            }
            Ok(None) => issues.push(ValidationIssue {
                fatal: true,
                message: "X is empty".into(),
            }),
            Err(e) => issues.push(ValidationIssue {
                fatal: true,
                message: format!("could not check X: {e}"),
            }),
        }
    }
    ValidationReport {
        ok: issues.iter().all(|i| !i.fatal),
        issues,
        probe_point,
    }
}

/// Center of the largest ball (radius capped at 1) inside X; `None` if X is empty.
fn chebyshev_center(x: &PolyhedralSet, n1: usize) -> Result<Option<Vec<f64>>> {
    let mut lp = MathProgram::new(ObjSense::Maximize);
    let cols: Vec<usize> = (0..n1).map(|_| lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
    let r = lp.add_col(0.0, 1.0, 1.0);
    for i in 0..x.a.rows() {
        let row = x.a.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        lp.add_row(
            cols.iter().map(|&j| (j, row[j])).chain([(r, norm)]),
            RowSense::Le,
            x.b[i],
        );
    }
    let res = solve_lp(&lp, false)?;
    Ok(match res.status {
        SolveStatus::Optimal => res.primal.map(|v| v[..n1].to_vec()),
        _ => None,
    })
}

/// Whether `{y : D y >= d - C x}` is nonempty.
pub fn det_block_feasible(p: &TwoStageProblem, x: &[f64]) -> bool {
    let mut lp = MathProgram::new(ObjSense::Minimize);
    let cols: Vec<usize> = (0..p.n2).map(|_| lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
    let rhs = p.det.rhs(x);
    for (i, r) in rhs.iter().enumerate() {
        lp.add_row(cols.iter().map(|&j| (j, p.det.dmat[(i, j)])), RowSense::Ge, *r);
    }
    matches!(solve_lp(&lp, false), Ok(r) if r.status == SolveStatus::Optimal && lp.max_violation(r.primal.as_deref().unwrap_or(&[])) <= FEASIBILITY_TOL)
}
