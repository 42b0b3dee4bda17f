use num_complex::Complex;

use holoball_core::kernels::Polynomial;
use holoball_core::operators::{OperatorSpec, TestFunction};
use holoball_core::sampling::Samples;
use holoball_core::Weight;
use holoball_experiments::experiments::{
    lambda_lemma_bound, nonexistence_probe, op_norm_lower_bound, probe_weights, self_adjoint_gap, weak_and_strong, NormBudget, ProbeCase, ProbeParams,
};
use holoball_experiments::{run_scenario, Budgets, Config, Error, Regime};

#[test]
fn lambda_lemma_constant() {
    assert!((lambda_lemma_bound(1.0, 2.0, 1.0, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert!((lambda_lemma_bound(0.0, 2.0, 0.5, 3.0).unwrap() - 8.0).abs() < 1e-12);
    assert!(matches!(lambda_lemma_bound(4.0, 2.0, 1.0, 2.0), Err(Error::Refused(_))));
    assert!(lambda_lemma_bound(0.1, 2.0, 1.0, 1.0).is_err());
}

#[test]
fn bergman_projection_is_self_adjoint() {
    let f = Polynomial::new(1, vec![(vec![1], Complex::new(1.0, 0.0)), (vec![0], Complex::new(0.5, -0.2))]).unwrap();
    let g = Polynomial::new(1, vec![(vec![2], Complex::new(0.3, 1.0)), (vec![1], Complex::new(1.0, 0.0))]).unwrap();
    let (lhs, rhs, se) = self_adjoint_gap(1, 0.5, 0.5, &f, &g, 600, 11).unwrap();
    assert!((lhs - rhs).norm() <= 4.0 * se.max(1e-12), "{lhs} vs {rhs} (se {se})");
}

#[test]
fn norm_lower_bound_edge_cases() {
    let spec = OperatorSpec::t(1, 1.0, 0.0).unwrap().with_spaces(2.0, 0.0, 0.0, Weight::one()).unwrap();
    let budget = NormBudget { outer: 800, inner: 800 };
    assert!(matches!(op_norm_lower_bound(&spec, &[], budget, 1), Err(Error::Refused(_)) | Err(Error::Core(_))));
    let one = TestFunction::constant(1, 1.0);
    let est = op_norm_lower_bound(&spec, std::slice::from_ref(&one), budget, 2).unwrap();
    assert!(est.value >= 1.0 - 4.0 * est.stderr - 0.02, "{est:?}");
    let zero = OperatorSpec::t(1, 1.0, 0.0).unwrap().with_spaces(2.0, 0.0, 0.0, Weight::Constant(0.0)).unwrap();
    let est = op_norm_lower_bound(&zero, &[one], budget, 3).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn weak_and_strong_vanish_on_zero() {
    let grid = Samples::<f64>::whole(1, 0.0, 200, 5).unwrap();
    let (weak, strong) = weak_and_strong(&grid, &vec![0.0; grid.points.len()], 0.0);
    assert_eq!(weak.value, 0.0);
    assert_eq!(strong.value, 0.0);
}

#[test]
fn probes_refuse_outside_the_impossibility_set() {
    assert!(ProbeCase::classify(0.0, 0.0, 2.0, 0.0, 0.0).is_none());
    assert_eq!(ProbeCase::classify(0.0, -1.5, 2.0, 0.0, 0.0), Some(ProbeCase::HolderChain { exponent: -1.5 }));
    assert_eq!(ProbeCase::classify(0.5, 0.0, 2.0, 1.0, 0.0), Some(ProbeCase::BoundaryGrowth));
    let pp = ProbeParams { dim: 1, s: 0.0, t: 0.0, p: 2.0, q: 0.0, big_q: 0.0 };
    let res = nonexistence_probe(pp, &probe_weights(&Weight::one()), &Budgets::default(), "x", "nonexistence", 1);
    assert!(matches!(res, Err(Error::Refused(_))));
}

fn suite() -> Config {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_suite.json");
    Config::load(&path).unwrap()
}

#[test]
fn necessity_scenarios_hold_across_the_eta_grid() {
    let cfg = suite();
    let scs: Vec<_> = cfg.scenarios.iter().filter(|s| matches!(s.regime, Regime::NecessityT | Regime::NecessityP)).collect();
    assert_eq!(scs.len(), 8);
    for sc in scs {
        let rep = run_scenario(sc);
        assert!(rep.passed(), "{}: {:?}", sc.id, rep.rules);
    }
}

#[test]
fn frontier_sweep_classifies_every_point() {
    let cfg = suite();
    for sc in cfg.scenarios.iter().filter(|s| s.regime == Regime::UnweightedFrontier) {
        let rep = run_scenario(sc);
        assert!(rep.passed(), "{}: {:?}", sc.id, rep.rules);
    }
}
