#![allow(dead_code)]

use padded_saa::model::{DeterministicSecondStage, LinearScenarioMap, Matrix, PolyhedralSet, TwoStageProblem};
use padded_saa::padded::Direction;
use padded_saa::sampling::{rng_from_seed, DistributionSpec, Marginal};
use rand::Rng;

/// `min c x + E F(x, xi)` with `F(x, xi) = min { y : xi <= x <= y }`, `X = [0, 2]`.
/// The random row reads `0 y >= xi - x`, so `H(x, xi) = xi - x`.
pub fn threshold_toy() -> TwoStageProblem {
    let mut map = LinearScenarioMap::zeros(1, 1, 1, 1);
    map.tk[0][(0, 1)] = 1.0;
    map.hbar[(0, 0)] = 1.0;
    map.q_map[(0, 1)] = 1.0;
    let x_set = PolyhedralSet {
        a: Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
        b: vec![2.0, 0.0],
        integrality: vec![],
    };
    let det = DeterministicSecondStage {
        dmat: Matrix::from_rows(&[vec![1.0]]).unwrap(),
        cmat: Matrix::from_rows(&[vec![-1.0]]).unwrap(),
        d: vec![0.0],
    };
    TwoStageProblem::new(vec![0.0], x_set, det, map, 1).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// `W`, `T`, `h` all depend on `xi`.
    General,
    /// `W` constant; `T`, `h` depend on `xi`.
    FixedRecourse,
    /// Fixed `W`; `h` and `T` move so that `H` is monotone with the returned signs.
    Monotone,
}

pub struct RandomInstance {
    pub problem: TwoStageProblem,
    pub spec: DistributionSpec,
    pub signs: Vec<Direction>,
}

/// Random instance with finite `H` everywhere on `[0, 1]^d`, `y >= 0`, and a
/// padded feasible region that is nonempty for `gamma` up to about 10:
/// the last random row makes every column sum of `W(xi)` strictly negative,
/// and `T(xi) >= 0.2` entrywise with `X = [0, 100]^n1`.
pub fn random_instance(seed: u64, n1: usize, n2: usize, rows: usize, d: usize, kind: Kind) -> RandomInstance {
    assert!(rows >= 2);
    let mut rng = rng_from_seed(seed);
    let mut map = LinearScenarioMap::zeros(rows, n1, n2, d);
    let signs: Vec<Direction> = (0..d)
        .map(|_| if rng.random_bool(0.5) { Direction::Increasing } else { Direction::Decreasing })
        .collect();
    let last = rows - 1;
    for k in 0..n2 {
        for p in 0..last {
            map.wk[k][(p, d)] = rng.random_range(-1.0..1.0);
            if kind == Kind::General {
                for q in 0..d {
                    if rng.random_bool(0.5) {
                        map.wk[k][(p, q)] = rng.random_range(-0.5..0.5);
                    }
                }
            }
        }
        for col in 0..=d {
            let s: f64 = (0..last).map(|p| map.wk[k][(p, col)]).sum();
            if s != 0.0 {
                map.wk[k][(last, col)] = -s;
            }
        }
        map.wk[k][(last, d)] -= rng.random_range(0.1..0.5);
        map.q_map[(k, d)] = rng.random_range(0.1..1.0);
    }
    for i in 0..n1 {
        for p in 0..rows {
            map.tk[i][(p, d)] = rng.random_range(0.5..1.5);
            for q in 0..d {
                let v = rng.random_range(0.0..0.05);
                map.tk[i][(p, q)] = match (kind, signs[q]) {
                    (Kind::Monotone, Direction::Increasing) => -v,
                    (Kind::Monotone, Direction::Decreasing) => v,
                    _ => if rng.random_bool(0.5) { v } else { -v },
                };
            }
        }
    }
    for p in 0..rows {
        map.hbar[(p, d)] = rng.random_range(0.0..1.0);
        for q in 0..d {
            let v = rng.random_range(0.0..1.0);
            map.hbar[(p, q)] = match (kind, signs[q]) {
                (Kind::Monotone, Direction::Increasing) => v,
                (Kind::Monotone, Direction::Decreasing) => -v,
                _ => rng.random_range(-1.0..1.0),
            };
        }
    }
    let mut a = Matrix::zeros(2 * n1, n1);
    let mut b = vec![0.0; 2 * n1];
    for i in 0..n1 {
        a[(i, i)] = 1.0;
        b[i] = 100.0;
        a[(n1 + i, i)] = -1.0;
    }
    let c = (0..n1).map(|_| rng.random_range(1.0..2.0)).collect();
    let x_set = PolyhedralSet { a, b, integrality: vec![] };
    let problem = TwoStageProblem::new(c, x_set, DeterministicSecondStage::nonnegative(n1, n2), map, d).unwrap();
    let spec = DistributionSpec::new(vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }; d]);
    RandomInstance { problem, spec, signs }
}

/// Every `J in [N]^d` in odometer order.
pub fn all_index_vectors(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut j = vec![0; d];
    loop {
        out.push(j.clone());
        let mut q = 0;
        loop {
            if q == d {
                return out;
            }
            j[q] += 1;
            if j[q] < n {
                break;
            }
            j[q] = 0;
            q += 1;
        }
    }
}

/// Solves `M z = r` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * z[k]).sum();
        z[row] = (r[row] - s) / m[row][row];
    }
    Some(z)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Optimum of `min obj' z` over `{z : G z >= g, E z = e}` by enumerating every
/// basic solution. Returns `None` when no vertex is feasible.
pub fn vertex_enumeration_min(obj: &[f64], ge: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)]) -> Option<(f64, Vec<f64>)> {
    let n = obj.len();
    let free = n - eq.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for act in subsets(ge.len(), free) {
        let rows: Vec<Vec<f64>> = eq.iter().map(|r| r.0.clone()).chain(act.iter().map(|&i| ge[i].0.clone())).collect();
        let rhs: Vec<f64> = eq.iter().map(|r| r.1).chain(act.iter().map(|&i| ge[i].1)).collect();
        let Some(z) = solve_dense(rows, rhs) else { continue };
        let ok = ge.iter().all(|(g, b)| g.iter().zip(&z).map(|(a, v)| a * v).sum::<f64>() >= b - 1e-9);
        if !ok {
            continue;
        }
        let v: f64 = obj.iter().zip(&z).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, z));
        }
    }
    best
}
