use holoball_core::geometry::BallPoint;
use holoball_core::weights::*;
use proptest::prelude::*;

fn at_defect(v: f64) -> BallPoint<f64> {
    BallPoint::real(&[(1.0 - v).sqrt(), 0.0]).unwrap()
}

#[test]
fn eval_examples() {
    let z = at_defect(0.25);
    assert_eq!(eval_weight(&Weight::<f64>::one(), &z), 1.0);
    assert!((eval_weight(&Weight::Standard(2.0), &z) - 0.0625).abs() < 1e-15);
    for v in [0.9, 0.3, 1e-3] {
        assert_eq!(Weight::Standard(0.0).eval(&at_defect(v)), 1.0);
    }
}

#[test]
fn dual_examples() {
    let z = at_defect(0.4);
    let d = dual_weight(&Weight::<f64>::one(), 2.0).unwrap();
    assert_eq!(d.eval(&z), 1.0);
    assert!(matches!(dual_weight(&Weight::Standard(0.7f64), 2.0).unwrap(), Weight::Standard(e) if (e + 0.7).abs() < 1e-15));
    assert!(matches!(dual_weight(&Weight::Standard(0.7f64), 3.0).unwrap(), Weight::Standard(e) if (e + 0.35).abs() < 1e-15));
    assert!(dual_weight(&Weight::<f64>::one(), 1.0).is_err());
}

#[test]
fn parser() {
    let z = at_defect(0.5);
    let w: Weight<f64> = parse_weight("2 * (1-|z|^2)^-0.5 * (1 - |z|^2)^(1.5)").unwrap();
    assert!((w.eval(&z) - 2.0 * 0.5).abs() < 1e-14);
    assert_eq!(w.boundary_exponent(), Some(1.0));
    assert!(matches!(parse_weight::<f64>("3").unwrap(), Weight::Constant(c) if c == 3.0));
    assert!(matches!(parse_weight::<f64>("(1-|z|^2)").unwrap(), Weight::Standard(e) if e == 1.0));
    for bad in ["", "-1", "(1-|z|)^2", "x", "(1-|z|^2)^a"] {
        assert!(parse_weight::<f64>(bad).is_err(), "{bad}");
    }
    let s = format!("{}", parse_weight::<f64>("(1-|z|^2)^0.25").unwrap());
    assert!(matches!(parse_weight::<f64>(&s).unwrap(), Weight::Standard(e) if e == 0.25));
}

#[test]
fn radial_table_nearest_sample() {
    let t = RadialTable::stratified(400, 12.0, |r: f64| 1.0 - r * r).unwrap();
    let w = Weight::Tabulated(t);
    for v in [0.5, 0.1, 0.01] {
        let got = w.eval(&at_defect(v));
        assert!((got - v).abs() < 0.1 * v, "{v}: {got}");
    }
}

proptest! {
    #[test]
    fn weights_are_nonnegative(eta in -3.0f64..3.0, c in 0.0f64..5.0, v in 1e-6f64..1.0) {
        let w = Weight::Product(vec![Weight::Constant(c), Weight::Standard(eta)]);
        let z = at_defect(v);
        prop_assert!(w.eval(&z) >= 0.0);
        prop_assert!((w.eval(&z) - c * v.powf(eta)).abs() <= 1e-12 * (c * v.powf(eta)).max(1.0));
    }

    #[test]
    fn dual_inverts(eta in -3.0f64..3.0, p in 1.1f64..6.0, v in 1e-4f64..1.0) {
        let w = Weight::Standard(eta);
        let d = dual_weight(&w, p).unwrap();
        let z = at_defect(v);
        let back = d.eval(&z).powf(-(p - 1.0));
        prop_assert!((back - w.eval(&z)).abs() <= 1e-9 * w.eval(&z));
    }
}
