use approx::assert_relative_eq;
use holoball_core::geometry::*;
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p1(x: f64, y: f64) -> BallPoint<f64> {
    BallPoint::new(vec![Complex::new(x, y)]).unwrap()
}

fn ball(r: f64, big_r: f64) -> PseudoBall<f64> {
    PseudoBall::new(BallPoint::on_axis(1, r).unwrap(), big_r).unwrap()
}

#[test]
fn distance_examples() {
    let z = p1(0.3, -0.4);
    assert_eq!(pseudo_distance(&z, &z), 0.0);
    assert_relative_eq!(pseudo_distance(&p1(0.5, 0.0), &p1(0.25, 0.0)), 0.25);
    assert_relative_eq!(pseudo_distance(&p1(0.5, 0.0), &p1(0.0, 0.5)), 2f64.sqrt(), max_relative = 1e-15);
    // origin convention: angular term vanishes
    assert_relative_eq!(pseudo_distance(&BallPoint::origin(1), &z), 0.5);
}

#[test]
fn containment_examples() {
    let b = ball(0.5, 0.2);
    assert!(ball_contains(&b, &b.center));
    assert!(!ball_contains(&b, &p1(0.25, 0.0)));
    assert!(ball_contains(&ball(0.5, 0.3), &p1(0.25, 0.0)));
}

#[test]
fn ball_invariants() {
    let b = ball(0.9, 0.2);
    assert!(b.touches_boundary);
    assert!(!ball(0.5, 0.3).touches_boundary);
    assert!(PseudoBall::new(BallPoint::origin(2), 4.5).is_err());
    assert!(PseudoBall::new(BallPoint::origin(2), 0.0).is_err());
    assert!(BallPoint::<f64>::real(&[0.6, 0.8]).is_err());
}

#[test]
fn sampled_points_lie_in_ball_and_are_reproducible() {
    for dim in 1..=3 {
        let b = PseudoBall::new(BallPoint::on_axis(dim, 0.8).unwrap(), 0.3).unwrap();
        for seed in 0..200 {
            let z = sample_ball(&b, seed).unwrap();
            assert!(b.contains(&z));
            assert_eq!(z, sample_ball(&b, seed).unwrap());
        }
    }
}

#[test]
fn sampled_mean_matches_quadrature() {
    // B(0.5, 0.1) in the disk: for each angle the radial section is an interval,
    // so the mean of z under area measure reduces to a 1-D angular quadrature.
    let (r0, big_r) = (0.5, 0.1);
    let m = 200_000;
    let th_max = 2.0 * (big_r / 2.0f64).asin();
    let (mut mass, mut mx) = (0.0, 0.0);
    for i in 0..m {
        let th = -th_max + (i as f64 + 0.5) * 2.0 * th_max / m as f64;
        let half = big_r - 2.0 * (th / 2.0).sin().abs();
        if half <= 0.0 {
            continue;
        }
        let (a, b) = (r0 - half, r0 + half);
        mass += (b * b - a * a) / 2.0;
        mx += (b.powi(3) - a.powi(3)) / 3.0 * th.cos();
    }
    let oracle = mx / mass; // imaginary part is 0 by symmetry
    let b = ball(r0, big_r);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let xs: Vec<Complex<f64>> = (0..n).map(|_| sample_ball_with(&b, &mut rng).unwrap().coords()[0]).collect();
    let mean = xs.iter().sum::<Complex<f64>>() / n as f64;
    let var_re = xs.iter().map(|x| (x.re - mean.re).powi(2)).sum::<f64>() / n as f64;
    let var_im = xs.iter().map(|x| (x.im - mean.im).powi(2)).sum::<f64>() / n as f64;
    assert!((mean.re - oracle).abs() < 3.0 * (var_re / n as f64).sqrt(), "{} vs {oracle}", mean.re);
    assert!(mean.im.abs() < 3.0 * (var_im / n as f64).sqrt());
}

#[test]
fn ball_measure_examples() {
    let n = 200_000;
    for big_r in [0.3f64, 0.7] {
        let b = PseudoBall::new(BallPoint::origin(1), big_r).unwrap();
        let m = ball_measure_mc(&b, 0.0, n, 1).unwrap();
        assert!((m.value - big_r * big_r).abs() < 4.0 * m.stderr + 1e-12);
    }
    let whole = PseudoBall::new(BallPoint::<f64>::origin(1), 4.0).unwrap();
    let m = ball_measure_mc(&whole, 1.0, n, 2).unwrap();
    assert!((m.value - 0.5).abs() < 4.0 * m.stderr + 1e-12, "{m}");
    let b = ball(0.9, 0.05);
    let m = ball_measure_mc(&b, 0.0, n, 3).unwrap();
    let ratio = m.value / ball_measure_model(&b, 0.0).unwrap();
    assert!(ratio > 0.05 && ratio < 20.0, "{ratio}");
}

#[test]
fn ball_measure_rejects_divergent_cases() {
    assert!(matches!(ball_measure_mc(&ball(0.9, 0.2), -1.0, 1000, 0), Err(holoball_core::Error::Divergent(_))));
    assert!(ball_measure_mc(&ball(0.5, 0.3), -1.5, 1000, 0).is_err());
    assert!(ball_measure_mc(&ball(0.5, 0.2), -1.5, 1000, 0).is_ok());
}

#[test]
fn ball_measure_model_examples() {
    assert_relative_eq!(ball_measure_model(&ball(0.9, 0.3), 1.0).unwrap(), 0.027, max_relative = 1e-14);
    assert_relative_eq!(ball_measure_model(&ball(0.5, 0.1), -1.0).unwrap(), 0.1);
    let b2 = PseudoBall::new(BallPoint::on_axis(2, 0.5).unwrap(), 0.1).unwrap();
    assert_relative_eq!(ball_measure_model(&b2, 0.0).unwrap(), 0.001, max_relative = 1e-14);
    assert!(ball_measure_model(&PseudoBall::new(BallPoint::origin(1), 0.5).unwrap(), 0.0).is_err());
}

#[test]
fn quasi_triangle_constant_is_finite() {
    for dim in 1..=3 {
        let k: f64 = probe_quasi_triangle(dim, 10_000, 11);
        assert!(k.is_finite() && (1.0..10.0).contains(&k), "N={dim}: K={k}");
    }
}

#[test]
fn near_point_inequalities() {
    // z0 = (r0, 0, ..., 0)
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dim in 1..=3 {
        for _ in 0..20_000 {
            let z: BallPoint<f64> = probe_point(dim, &mut rng);
            let r0 = probe_point::<f64, _>(1, &mut rng).modulus();
            let z0 = BallPoint::on_axis(dim, r0).unwrap();
            let d = pseudo_distance(&z, &z0);
            let z1 = z.coords()[0];
            assert!((Complex::new(1.0, 0.0) - z1 * r0).norm() >= 0.25 * d - 1e-12);
            assert!((z1 - r0).norm() <= d + 1e-12);
            let tail: f64 = z.coords()[1..].iter().map(|c| c.norm_sqr()).sum();
            assert!(tail <= 2.0 * d + 1e-12);
            if dim == 1 {
                assert!(z.euclidean_distance(&z0) <= d + 1e-12);
            }
        }
    }
}

#[test]
fn euclidean_bound_fails_in_higher_dimension() {
    let (r0, eps) = (0.9f64, 0.01f64);
    let z = BallPoint::real(&[r0 * (1.0 - eps), r0 * (2.0 * eps - eps * eps).sqrt()]).unwrap();
    let z0 = BallPoint::on_axis(2, r0).unwrap();
    let d = pseudo_distance(&z, &z0);
    assert_relative_eq!(d, eps, max_relative = 1e-9);
    assert!(z.euclidean_distance(&z0) > 10.0 * d);
}

#[test]
fn separation_property_holds_with_probed_constant() {
    for dim in 1..=2 {
        let c1: f64 = probe_separation(dim, 20_000, 3);
        assert!(c1.is_finite());
        // fresh triples with the probed constant (with margin)
        let c1 = 2.0 * c1;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let one = Complex::new(1.0, 0.0);
        for _ in 0..20_000 {
            let w0: BallPoint<f64> = probe_point(dim, &mut rng);
            let w = perturb(&w0, &mut rng);
            let z: BallPoint<f64> = probe_point(dim, &mut rng);
            if pseudo_distance(&z, &w0) > c1 * pseudo_distance(&w, &w0) {
                assert!((one - z.inner(&w)).norm() >= 0.5 * (one - z.inner(&w0)).norm());
            }
        }
    }
}

#[test]
fn boundary_balls_have_bounded_doubling() {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let r: f64 = 1.0 - 10f64.powf(-0.3 - 2.5 * rand::Rng::random::<f64>(&mut rng));
        let big_r = (1.0 - r) * (1.2 + 3.0 * rand::Rng::random::<f64>(&mut rng));
        let c = BallPoint::on_axis(1, r).unwrap();
        for q in [0.0, 1.0] {
            let small = ball_measure_mc(&PseudoBall::new(c.clone(), big_r.min(2.0)).unwrap(), q, 20_000, i).unwrap();
            let large = ball_measure_mc(&PseudoBall::new(c.clone(), (2.0 * big_r).min(4.0)).unwrap(), q, 20_000, i).unwrap();
            worst = worst.max(large.value / small.value);
        }
    }
    assert!(worst < 64.0, "doubling ratio {worst}");
}

#[test]
fn proportional_balls_swap_with_dilated_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in [0.1, 0.25, 0.4] {
        let kp = k / (1.0 - k);
        for _ in 0..5_000 {
            let z: BallPoint<f64> = probe_point(2, &mut rng);
            let b = PseudoBall::proportional(&z, k).unwrap();
            let Ok(zp) = sample_ball_with(&b, &mut rng) else { continue };
            assert!(PseudoBall::proportional(&zp, kp).unwrap().contains(&z));
        }
    }
}

#[test]
fn families_are_boundary_touching() {
    let fam = BallFamily::<f64>::dyadic(2, 10);
    assert_eq!(fam.len(), 20);
    assert!(fam.balls.iter().all(|b| b.touches_boundary));
    let close = BallFamily::<f64>::almost_touching(1, 6);
    assert!(close.balls.iter().all(|b| !b.touches_boundary && b.boundary_gap() > 0.0));
}

#[test]
fn single_precision_points() {
    let z = BallPoint::<f32>::real(&[0.5, 0.25]).unwrap();
    let w = BallPoint::<f32>::real(&[0.25, 0.5]).unwrap();
    let d64 = pseudo_distance(&z.cast::<f64>(), &w.cast::<f64>());
    assert!((pseudo_distance(&z, &w) as f64 - d64).abs() < 1e-6);
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -0.5f64..0.5, d in -0.5f64..0.5) {
        let z = BallPoint::new(vec![Complex::new(a, b), Complex::new(c * 0.5, 0.1)]).unwrap();
        let w = BallPoint::new(vec![Complex::new(c, d), Complex::new(-0.2, a * 0.5)]).unwrap();
        prop_assert_eq!(pseudo_distance(&z, &w), pseudo_distance(&w, &z));
    }
}
