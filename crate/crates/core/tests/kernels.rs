use approx::assert_relative_eq;
use holoball_core::geometry::BallPoint;
use holoball_core::kernels::*;
use num_complex::Complex;
use num_rational::BigRational;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn pochhammer_values() {
    assert_eq!(pochhammer(3.7, 0), 1.0);
    assert_eq!(pochhammer(1.0, 4), 24.0);
    assert_relative_eq!(pochhammer(2.5, 3), 39.375);
    assert_eq!(pochhammer(rat(5, 2), 3), rat(315, 8));
}

#[test]
fn pochhammer_matches_gamma_ratio() {
    // Γ(u+k)/Γ(u) via lgamma-free product of Γ(x+1) = xΓ(x) identities at half integers
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let gamma_half = |m: usize| {
        // Γ(m + 1/2)
        (0..m).fold(sqrt_pi, |acc, j| acc * (j as f64 + 0.5))
    };
    for k in 0..10 {
        assert_relative_eq!(pochhammer(0.5, k), gamma_half(k) / gamma_half(0), max_relative = 1e-13);
    }
}

#[test]
fn coeff_c_branches() {
    let p1 = KernelParams::new(1, 0.0).unwrap();
    assert_eq!(coeff_c(&p1, 0.7, 0), 1.0);
    assert_eq!(coeff_c(&p1, -5.0, 0), 1.0);
    assert_relative_eq!(coeff_c(&p1, 0.0, 2), 3.0);
    assert_relative_eq!(coeff_c(&p1, -3.0, 2), 1.0 / 6.0);
    let pr = KernelParams::new(1, rat(0, 1)).unwrap();
    assert_eq!(coeff_c(&pr, rat(-3, 1), 2), rat(1, 6));
    // a = -(N+1) lies on the lower branch: k!/(2)_k = 1/(k+1)
    assert_eq!(coeff_c(&pr, rat(-2, 1), 4), rat(1, 5));
}

#[test]
fn diff_coeff_values() {
    let p = KernelParams::new(1, 0.0).unwrap();
    assert_eq!(diff_coeff(0.3, 0.0, &p, 5).unwrap(), 1.0);
    assert_relative_eq!(diff_coeff(0.0, 1.0, &p, 1).unwrap(), 1.5);
    // c_2(-1) = (1)_2/2! = 1 on the upper branch, c_2(-3) = 1/6 on the lower
    assert_relative_eq!(diff_coeff(-3.0, 2.0, &p, 2).unwrap(), 6.0, max_relative = 1e-14);
}

#[test]
fn diff_coeff_composes_exactly() {
    for dim in 1..=3usize {
        let p = KernelParams::new(dim, rat(0, 1)).unwrap();
        let vals = [rat(-7, 1), rat(-9, 2), rat(-1, 3), rat(0, 1), rat(5, 4), rat(2, 1)];
        for s in &vals {
            for t in &vals {
                for u in &vals {
                    for k in 0..8 {
                        let lhs = diff_coeff(s.clone(), t.clone(), &p, k).unwrap() * diff_coeff(s + t, u.clone(), &p, k).unwrap();
                        assert_eq!(lhs, diff_coeff(s.clone(), t + u, &p, k).unwrap(), "N={dim} s={s} t={t} u={u} k={k}");
                    }
                }
            }
        }
    }
}

#[test]
fn hyp2f1_trivial_and_log_case() {
    let ctl = SeriesControl::default();
    assert_eq!(hyp2f1_11(2.7, c(0.0, 0.0), &ctl).unwrap(), c(1.0, 0.0));
    let got = hyp2f1_11(2.0, c(0.5, 0.0), &ctl).unwrap();
    assert_relative_eq!(got.re, 2.0 * 2f64.ln(), max_relative = 1e-12);
}

#[test]
fn hyp2f1_matches_long_partial_sum() {
    // independent oracle: 500-term partial sum of k!/(3)_k v^k = 2/((k+1)(k+2)) v^k
    let v = 0.5f64;
    let oracle: f64 = (0..500).map(|k| 2.0 / ((k as f64 + 1.0) * (k as f64 + 2.0)) * v.powi(k)).sum();
    let got = hyp2f1_11(3.0, c(v, 0.0), &SeriesControl::default()).unwrap();
    assert_relative_eq!(got.re, oracle, max_relative = 1e-12);
}

#[test]
fn hyp2f1_reports_truncation() {
    let ctl = SeriesControl { max_terms: 5, tail_tolerance: 1e-12 };
    assert!(matches!(hyp2f1_11(2.0, c(0.9, 0.0), &ctl), Err(holoball_core::Error::SeriesTruncation { .. })));
    assert!(hyp2f1_11(-2.0, c(0.1, 0.0), &SeriesControl::default()).is_err());
}

#[test]
fn integer_closed_form_agrees_with_series() {
    let ctl = SeriesControl { max_terms: 10_000_000, tail_tolerance: 1e-14 };
    for q in [-2.0, -3.0, -4.0, -6.0] {
        let p = KernelParams::new(1, q).unwrap();
        for v in [c(0.5, 0.0), c(0.9, 0.1), c(-0.7, 0.6), c(0.999, 0.0), c(0.3, -0.55)] {
            let fast = kernel_of_inner(&p, v, &ctl).unwrap();
            let series = kernel_series(&p, v, &ctl).unwrap();
            assert!((fast - series).norm() <= 1e-11 * series.norm(), "q={q} v={v}: {fast} vs {series}");
        }
    }
}

#[test]
fn kernel_examples() {
    let ctl = SeriesControl::default();
    let w = BallPoint::new(vec![c(0.3, 0.2), c(-0.1, 0.4)]).unwrap();
    for q in [-4.5, -3.0, -1.0, 0.0, 2.0] {
        let p = KernelParams::new(2, q).unwrap();
        let k = kernel_k(&p, &BallPoint::origin(2), &w, &ctl).unwrap();
        assert_eq!(k, c(1.0, 0.0));
    }
    let p = KernelParams::new(1, 0.0).unwrap();
    let z = BallPoint::real(&[0.5]).unwrap();
    assert_relative_eq!(kernel_k(&p, &z, &z, &ctl).unwrap().re, 16.0 / 9.0, max_relative = 1e-14);
    let p = KernelParams::new(1, -2.0).unwrap();
    let z = BallPoint::real(&[0.5f64.sqrt()]).unwrap();
    let got = kernel_k(&p, &z, &z, &ctl).unwrap();
    assert_relative_eq!(got.re, 2.0 * 2f64.ln(), max_relative = 1e-12);
}

#[test]
fn coefficient_growth_is_polynomial() {
    for dim in 1..=2usize {
        for q in [-0.5, 0.0, 1.0] {
            let p = KernelParams::new(dim, q).unwrap();
            let e = dim as f64 + q;
            let a = coeff_c(&p, q, 1_000) / 1_000f64.powf(e);
            let b = coeff_c(&p, q, 10_000) / 10_000f64.powf(e);
            assert!(a > 0.0 && (a / b - 1.0).abs() < 0.1, "N={dim} q={q}: {a} {b}");
        }
    }
}

#[test]
fn bounds_scan_branches() {
    for (dim, q) in [(1usize, -0.5), (1, 0.0), (2, 1.0), (2, -2.5)] {
        let s = kernel_bounds_scan(&KernelParams::new(dim, q).unwrap(), 40).unwrap();
        assert!(s.min_modulus >= 2f64.powf(-(1.0 + dim as f64 + q)) * (1.0 - 1e-12));
        assert_eq!(s.max_modulus, MaxBound::Unbounded);
        assert!(s.rho0_estimate > 0.0);
        assert!(s.edge_growth > 2.0);
    }
    let s = kernel_bounds_scan(&KernelParams::new(1, -3.0f64).unwrap(), 40).unwrap();
    assert!(matches!(s.max_modulus, MaxBound::Finite(m) if m.is_finite() && m <= 2.0 + 1e-9));
    assert!(s.min_modulus > 0.0);
    assert!(s.rho0_estimate > 0.0);
}

#[test]
fn i_st_examples() {
    let one = Polynomial::<f64>::constant(1, 1.0);
    let z = BallPoint::real(&[0.5]).unwrap();
    for (s, t) in [(0.0, 1.0), (1.0, -0.5), (-0.5, 2.0)] {
        assert_relative_eq!(apply_i_st(&one, s, t, &z).unwrap().re, 0.75f64.powf(t), max_relative = 1e-14);
    }
    let f = Polynomial::<f64>::new(2, vec![(vec![1, 2], c(0.5, -1.0)), (vec![0, 0], c(2.0, 0.0))]).unwrap();
    let w = BallPoint::new(vec![c(0.2, 0.1), c(-0.3, 0.5)]).unwrap();
    assert_eq!(apply_i_st(&f, 0.4, 0.0, &w).unwrap(), f.eval(&w));
    let zf = Polynomial::<f64>::monomial(vec![1]);
    assert_relative_eq!(apply_i_st(&zf, 0.0, 1.0, &z).unwrap().re, 0.5625, max_relative = 1e-14);
}

fn inner_pair(dim: usize) -> impl Strategy<Value = (BallPoint<f64>, BallPoint<f64>)> {
    let coord = (-1.0f64..1.0, -1.0f64..1.0);
    (proptest::collection::vec(coord.clone(), dim), proptest::collection::vec(coord, dim), 0.0f64..0.97, 0.0f64..0.97).prop_map(move |(a, b, ra, rb)| {
        let mk = |v: Vec<(f64, f64)>, r: f64| {
            let n = v.iter().map(|(x, y)| x * x + y * y).sum::<f64>().sqrt().max(1e-9);
            BallPoint::new(v.into_iter().map(|(x, y)| c(x * r / n, y * r / n)).collect::<Vec<_>>()).unwrap()
        };
        (mk(a, ra), mk(b, rb))
    })
}

proptest! {
    #[test]
    fn kernel_is_hermitian((z, w) in inner_pair(2), q in -6.0f64..3.0) {
        let p = KernelParams::new(2, q).unwrap();
        let ctl = SeriesControl::default();
        let a = kernel_k(&p, &z, &w, &ctl).unwrap();
        let b = kernel_k(&p, &w, &z, &ctl).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn power_series_matches_closed_form((z, w) in inner_pair(1), q in -1.9f64..2.0) {
        let p = KernelParams::new(1, q).unwrap();
        let ctl = SeriesControl::default();
        let v = z.inner(&w);
        let closed = kernel_of_inner(&p, v, &ctl).unwrap();
        let series = kernel_series(&p, v, &ctl).unwrap();
        prop_assert!((closed - series).norm() <= 1e-10 * closed.norm());
    }

    #[test]
    fn pochhammer_recurrence(num in -40i64..40, den in 1i64..7, k in 0usize..12) {
        let u = rat(num, den);
        prop_assert_eq!(pochhammer(u.clone(), k + 1), pochhammer(u.clone(), k) * (u + rat(k as i64, 1)));
    }

    #[test]
    fn diff_coeff_composes_in_floats(s in -6.0f64..3.0, t in -3.0f64..3.0, u in -3.0f64..3.0, k in 0usize..30) {
        let p = KernelParams::new(2, 0.0).unwrap();
        let lhs = diff_coeff(s, t, &p, k).unwrap() * diff_coeff(s + t, u, &p, k).unwrap();
        let rhs = diff_coeff(s, t + u, &p, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
    }
}

#[test]
fn non_integer_branch_matches_series() {
    let ctl = SeriesControl { max_terms: 10_000_000, tail_tolerance: 1e-15 };
    for q in [-2.5, -3.3, -4.75, -7.1] {
        let p = KernelParams::new(1, q).unwrap();
        for v in [c(0.6, 0.0), c(0.9, 0.3), c(-0.7, 0.6), c(0.95, 0.0), c(0.2, -0.9), c(-0.93, 0.0)] {
            let fast = kernel_of_inner(&p, v, &ctl).unwrap();
            let series = kernel_series(&p, v, &ctl).unwrap();
            assert!((fast - series).norm() <= 1e-11 * series.norm(), "q={q} v={v}: {fast} vs {series}");
        }
    }
}

#[test]
fn non_integer_branch_near_the_sphere() {
    // 2F1(1,1;3/2;v) = asin(√v)/(√v √(1-v)), and one contiguous step
    // 2F1(1,1;5/2;v) = 3/2 (2 - (1-v) h)/v with h = 2 2F1(1,1;3/2;v).
    let one = c(1.0, 0.0);
    let p = KernelParams::new(1, -2.5).unwrap();
    for v in [c(1.0 - 1e-6, 0.0), c(0.999, 0.02), c(0.0, 0.9999), c(-0.99999, 0.0), c(0.5, 0.86)] {
        let sv = v.sqrt();
        let f_half = sv.asin() / (sv * (one - v).sqrt());
        let oracle = (one * 2.0 - (one - v) * f_half * 2.0) / v * 1.5;
        let got = kernel_of_inner(&p, v, &SeriesControl::default()).unwrap();
        assert!((got - oracle).norm() <= 1e-11 * oracle.norm(), "v={v}: {got} vs {oracle}");
    }
}
