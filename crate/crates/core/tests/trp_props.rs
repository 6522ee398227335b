use padded_saa::feasibility::{estimate_recourse_likelihood, eval_h, eval_q, Evaluator};
use padded_saa::padded::Direction;
use padded_saa::sampling::rng_from_seed;
use padded_saa::trp::*;
use rand::Rng;

#[test]
fn single_route_closed_form() {
    let inst = generate_trp(&TrpConfig::base(1, 1, 3)).unwrap();
    let xi = [1.0, 1.0, 2.0];
    // y <= x and y >= 2: H = max(y - x, 2 - y) minimized at y = (x + 2) / 2.
    for x in [0.0, 1.0, 2.0, 3.5] {
        let h = eval_h(&inst.problem, &[x], &xi).unwrap();
        assert!((h - (1.0 - x / 2.0)).abs() < 1e-8, "x = {x}: {h}");
    }
    // Unit cost 2 q0 - q0 rho = q0 at rho = 1, shipping exactly the demand.
    let q0 = inst.q0[(0, 0)];
    let q = eval_q(&inst.problem, &[3.0], &xi).unwrap().finite().unwrap();
    assert!((q - 2.0 * q0).abs() < 1e-8);
    assert!(!eval_q(&inst.problem, &[1.5], &xi).unwrap().is_finite());
}

#[test]
fn generation_is_deterministic_and_shaped() {
    let a = generate_trp(&TrpConfig::base(4, 3, 11)).unwrap();
    let b = generate_trp(&TrpConfig::base(4, 3, 11)).unwrap();
    assert_eq!(a.problem.to_json().unwrap(), b.problem.to_json().unwrap());
    assert_eq!(a.layout.d_dim(), 4 + 12 + 3);
    assert_eq!(a.problem.d_dim, 19);
    assert_eq!(a.problem.n2, 12);
    assert_eq!(a.problem.random_rows(), 7);
    assert!(!a.problem.fixed_recourse);
    let c = generate_trp(&TrpConfig::base(4, 3, 12)).unwrap();
    assert_ne!(a.c, c.c);
    let f = generate_trp(&TrpConfig::factor(4, 3, 2, 11)).unwrap();
    assert!(f.is_factor());
    assert_eq!(f.layout.d_dim(), 4 + 12 + 2);
    assert!(f.signs.is_none());
    assert_eq!(f.pins.iter().filter(|p| p.is_none()).count(), 2);
    assert!(generate_trp(&TrpConfig::base(0, 3, 1)).is_err());
}

#[test]
fn base_slack_is_monotone_in_the_declared_directions() {
    let inst = generate_trp(&TrpConfig::base(3, 3, 5)).unwrap();
    let signs = inst.signs.clone().unwrap();
    let mut rng = rng_from_seed(5);
    let mut ev = Evaluator::new(&inst.problem);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..20.0)).collect();
        let a = inst.spec.draw_one(&mut rng);
        let b: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(q, &v)| {
                let room = match signs[q] {
                    Direction::Increasing => inst.support_hi[q] - v,
                    Direction::Decreasing => inst.support_lo[q] - v,
                };
                v + rng.random::<f64>() * room
            })
            .collect();
        assert!(ev.h(&x, &a).unwrap() <= ev.h(&x, &b).unwrap() + 1e-7);
    }
}

#[test]
fn factor_slack_is_not_monotone_in_some_factor() {
    let inst = generate_trp(&TrpConfig::factor(2, 3, 1, 2)).unwrap();
    let a = inst.loadings.clone().unwrap();
    assert!((0..3).any(|k| a[(0, k)] > 0.0) && (0..3).any(|k| a[(0, k)] < 0.0));
    let q = inst.layout.tail(0);
    let mut rng = rng_from_seed(2);
    let mut ev = Evaluator::new(&inst.problem);
    let (mut up, mut down) = (false, false);
    for _ in 0..400 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..20.0)).collect();
        let lo = inst.spec.draw_one(&mut rng);
        let mut hi = lo.clone();
        hi[q] = lo[q] + rng.random::<f64>() * (1.0 - lo[q]);
        let d = ev.h(&x, &hi).unwrap() - ev.h(&x, &lo).unwrap();
        up |= d > 1e-6;
        down |= d < -1e-6;
    }
    assert!(up && down, "up {up}, down {down}");
}

#[test]
fn hardest_scenario_sits_in_the_support_box() {
    let inst = generate_trp(&TrpConfig::base(3, 4, 8)).unwrap();
    let xi = hardest_scenario(&inst).unwrap();
    let signs = inst.signs.clone().unwrap();
    for q in 0..xi.len() {
        assert!(inst.support_lo[q] <= xi[q] && xi[q] <= inst.support_hi[q]);
        let want = match signs[q] {
            Direction::Increasing => inst.support_hi[q],
            Direction::Decreasing => inst.support_lo[q],
        };
        assert_eq!(xi[q], want);
    }
}

#[test]
fn reliable_decisions_are_always_feasible() {
    for inst in [
        generate_trp(&TrpConfig::base(3, 3, 9)).unwrap(),
        generate_trp(&TrpConfig::factor(3, 3, 2, 9)).unwrap(),
    ] {
        assert!(!is_completely_reliable(&inst, &[0.0; 3]).unwrap());
        let x = vec![100.0; 3];
        assert!(is_completely_reliable(&inst, &x).unwrap());
        let est = estimate_recourse_likelihood(&inst.problem, &x, &inst.spec, 500, 9).unwrap();
        assert_eq!(est.phi_hat, 1.0);
    }
}

#[test]
fn metadata_describes_the_instance() {
    let inst = generate_trp(&TrpConfig::factor(2, 2, 1, 4)).unwrap();
    let meta = inst.metadata();
    assert_eq!(meta["variant"], "factor");
    assert_eq!(meta["layout"]["n"], 2);
    assert_eq!(meta["layout"]["l"], 1);
    assert_eq!(meta["config"]["seed"], 4);
}

#[test]
fn factor_worst_case_matches_exhaustive_box_corners() {
    let inst = generate_trp(&TrpConfig::factor(2, 2, 3, 6)).unwrap();
    let box_sample = padded_saa::sampling::SampleSet::from_rows(vec![inst.support_lo.clone(), inst.support_hi.clone()]).unwrap();
    let mut rng = rng_from_seed(6);
    for _ in 0..5 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..30.0)).collect();
        let exact = worst_case_slack(&inst, &x).unwrap();
        let bf = padded_saa::padded::brute_force_separation(&inst.problem, &box_sample, &x, 1 << 10).unwrap();
        assert!((exact - bf.value).abs() < 1e-7, "{exact} vs {}", bf.value);
        // The per-demand relaxation can only overstate the worst case.
        let relaxed = eval_h(inst.reliability_problem(), &x, &hardest_scenario(&inst).unwrap()).unwrap();
        assert!(relaxed >= exact - 1e-7);
    }
}
