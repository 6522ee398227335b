mod common;

use common::{random_instance, Kind};
use padded_saa::model::*;
use padded_saa::sampling::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

/// `R(xi) - R(0)` flattened, i.e. the linear part of the affine map.
fn linear_part(p: &TwoStageProblem, xi: &[f64]) -> Vec<f64> {
    let r = p.realize(xi).unwrap();
    let r0 = p.realize(&vec![0.0; xi.len()]).unwrap();
    let flat = |s: &ScenarioRealization| {
        let mut v = s.q.clone();
        v.extend(s.wbar.to_rows().concat());
        v.extend(s.tbar.to_rows().concat());
        v.extend(s.hbar.iter());
        v
    };
    flat(&r).iter().zip(flat(&r0)).map(|(a, b)| a - b).collect()
}

proptest! {
    #[test]
    fn realization_is_linear_in_xi(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let inst = random_instance(seed, 2, 3, 3, 3, Kind::General);
        let mut rng = rng_from_seed(seed + 1);
        let x1: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let comb: Vec<f64> = x1.iter().zip(&x2).map(|(u, v)| a * u + b * v).collect();
        let l1 = linear_part(&inst.problem, &x1);
        let l2 = linear_part(&inst.problem, &x2);
        let lc = linear_part(&inst.problem, &comb);
        for i in 0..lc.len() {
            prop_assert!(close(lc[i], a * l1[i] + b * l2[i]));
        }
    }

    #[test]
    fn mixed_scenarios_stay_in_the_coordinate_value_sets(seed in 0u64..1000, n in 1usize..5, d in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let sample: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let j: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();
        let xi = mixed_scenario(&sample, &j).unwrap();
        for q in 0..d {
            prop_assert!(sample.iter().any(|row| row[q] == xi[q]));
            prop_assert_eq!(xi[q], sample[j[q]][q]);
        }
    }
}

#[test]
fn random_map_matches_hand_assembly() {
    let mut rng = rng_from_seed(7);
    let (rows, n1, n2, d) = (3, 2, 2, 4);
    let mut map = LinearScenarioMap::zeros(rows, n1, n2, d);
    for k in 0..n2 {
        for p in 0..rows {
            for q in 0..=d {
                map.wk[k][(p, q)] = rng.random_range(-1.0..1.0);
            }
        }
    }
    for k in 0..n1 {
        for p in 0..rows {
            for q in 0..=d {
                map.tk[k][(p, q)] = rng.random_range(-1.0..1.0);
            }
        }
    }
    for p in 0..rows {
        for q in 0..=d {
            map.hbar[(p, q)] = rng.random_range(-1.0..1.0);
        }
    }
    for k in 0..n2 {
        for q in 0..=d {
            map.q_map[(k, q)] = rng.random_range(-1.0..1.0);
        }
    }
    let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut ext = xi.clone();
    ext.push(1.0);
    let r = realize_scenario(&map, &xi).unwrap();
    let dot = |m: &SparseMatrix, p: usize| (0..=d).map(|q| m[(p, q)] * ext[q]).sum::<f64>();
    for p in 0..rows {
        assert!(close(r.hbar[p], dot(&map.hbar, p)));
        for k in 0..n2 {
            assert!(close(r.wbar[(p, k)], dot(&map.wk[k], p)));
        }
        for k in 0..n1 {
            assert!(close(r.tbar[(p, k)], dot(&map.tk[k], p)));
        }
    }
    for k in 0..n2 {
        assert!(close(r.q[k], dot(&map.q_map, k)));
    }
}

#[test]
fn origin_gives_zero_linear_map() {
    let map = {
        let mut m = LinearScenarioMap::zeros(2, 1, 1, 2);
        m.wk[0][(0, 1)] = 3.0;
        m.tk[0][(1, 0)] = 2.0;
        m.hbar[(0, 0)] = 1.0;
        m
    };
    let r = realize_scenario(&map, &[0.0, 0.0]).unwrap();
    assert_eq!(r.hbar, vec![0.0, 0.0]);
    assert_eq!(r.wbar.to_rows(), vec![vec![0.0], vec![0.0]]);
    assert_eq!(r.tbar.to_rows(), vec![vec![0.0], vec![0.0]]);
}

#[test]
fn mixed_scenario_lookup() {
    let mut rng = rng_from_seed(3);
    let sample: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    // J = (2, 3, 1) in one-based indexing.
    let xi = mixed_scenario(&sample, &[1, 2, 0]).unwrap();
    assert_eq!(xi, vec![sample[1][0], sample[2][1], sample[0][2]]);
}

#[test]
fn fixed_recourse_gives_identical_w() {
    let inst = random_instance(11, 2, 3, 3, 3, Kind::FixedRecourse);
    assert!(inst.problem.fixed_recourse);
    let w0 = inst.problem.realize(&[0.1, 0.5, 0.9]).unwrap().wbar;
    let w1 = inst.problem.realize(&[0.7, 0.2, 0.3]).unwrap().wbar;
    for (a, b) in w0.to_rows().concat().iter().zip(w1.to_rows().concat()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert!(!random_instance(11, 2, 3, 3, 3, Kind::General).problem.fixed_recourse);
}

#[test]
fn json_round_trip_preserves_realizations() {
    let inst = random_instance(5, 2, 2, 3, 2, Kind::General);
    let s = inst.problem.to_json().unwrap();
    for key in ["\"c\"", "\"A\"", "\"b\"", "\"D\"", "\"C\"", "\"Tk\"", "\"Wk\"", "\"Hbar\"", "\"q_map\"", "\"d_dim\""] {
        assert!(s.contains(key), "missing {key}");
    }
    let back = TwoStageProblem::from_json(&s).unwrap();
    let xi = [0.3, 0.8];
    assert_eq!(inst.problem.realize(&xi).unwrap(), back.realize(&xi).unwrap());
    assert_eq!(inst.problem.c, back.c);
}

#[test]
fn sparse_triplet_form_is_accepted() {
    let dense: SparseMatrix = serde_json::from_str("[[0.0, 2.0], [0.0, 0.0]]").unwrap();
    let sparse: SparseMatrix = serde_json::from_str(r#"{"rows": 2, "cols": 2, "triplets": [[0, 1, 2.0]]}"#).unwrap();
    assert_eq!(dense, sparse);
    assert!(serde_json::from_str::<SparseMatrix>(r#"{"rows": 1, "cols": 1, "triplets": [[0, 3, 1.0]]}"#).is_err());
    let mut big = SparseMatrix::zeros(100, 100);
    big[(3, 4)] = 1.5;
    let s = serde_json::to_string(&big).unwrap();
    assert!(s.contains("triplets"));
    assert_eq!(serde_json::from_str::<SparseMatrix>(&s).unwrap(), big);
}

#[test]
fn validation_flags_bad_inputs() {
    let inst = random_instance(1, 2, 2, 3, 2, Kind::General);
    assert!(validate_problem(&inst.problem).ok);
    let mut p = inst.problem.clone();
    p.x_set.b.push(0.0);
    assert!(!validate_problem(&p).ok);
}
