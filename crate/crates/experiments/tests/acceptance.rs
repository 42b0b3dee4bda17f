//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Criteria 6, 7, 8 and 10 run scenarios from the bundled suite
//! `configs/paper_suite.json`; the others call the core library directly.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holoball_core::classes::{
    ball_class_quantity, class_constant_estimate, default_family, membership_verdict, ClassSpec, ClassValue, Verdict, VerdictThresholds,
};
use holoball_core::fit::fit_line;
use holoball_core::geometry::{ball_measure_mc, ball_measure_model, BallFamily, Quantifier};
use holoball_core::integration::{forelli_rudin_exponent, Integrand, DEFAULT_FR_RADII};
use holoball_core::kernels::{kernel_bounds_scan, kernel_of_inner, kernel_series, KernelParams, MaxBound, Polynomial, SeriesControl};
use holoball_core::maximal::{maximal_value, regularize, tail_bound_ratio, MaximalKind, Regularization, RegularizationParams};
use holoball_core::operators::projection_identity_check;
use holoball_core::sampling::Samples;
use holoball_core::{Ball, Point, Weight};
use holoball_experiments::report::Uncertainty;
use holoball_experiments::{run_scenario, Config, Report};

type Outcome = (bool, String);

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn suite() -> Config {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_suite.json");
    Config::load(&path).expect("bundled suite loads")
}

fn run_ids(cfg: &Config, ids: &[&str]) -> Vec<Report> {
    ids.iter()
        .map(|id| {
            let sc = cfg.scenarios.iter().find(|s| s.id == *id).unwrap_or_else(|| panic!("scenario `{id}` missing from suite"));
            run_scenario(sc)
        })
        .collect()
}

fn failed_rules(reports: &[Report]) -> Vec<String> {
    reports.iter().flat_map(|r| r.rules.iter().filter(|x| !x.passed).map(move |x| format!("{}:{} ({})", r.scenario, x.name, x.detail))).collect()
}

fn value(r: &Report, q: &str) -> f64 {
    r.find(q).map_or(f64::NAN, |row| row.value)
}

/// Random point with `|z| <= r_max`.
fn random_point(rng: &mut ChaCha8Rng, dim: usize, r_max: f64) -> Point {
    loop {
        let coords: Vec<Complex<f64>> = (0..dim).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = coords.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < r_max {
            return Point::new(coords).unwrap();
        }
    }
}

fn point_1d(r: f64, theta: f64) -> Point {
    Point::new(vec![Complex::from_polar(r, theta)]).unwrap()
}

fn criterion_1() -> Outcome {
    let ctl = SeriesControl { max_terms: 10_000_000, tail_tolerance: 1e-15 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for dim in [1usize, 2] {
        for q in [-0.5, 0.0, 1.0] {
            let p = KernelParams::new(dim, q).unwrap();
            let mut count = 0;
            while count < 1000 {
                let (z, w) = (random_point(&mut rng, dim, 1.0), random_point(&mut rng, dim, 1.0));
                let v = z.inner(&w);
                if v.norm() > 0.95 {
                    continue;
                }
                count += 1;
                let closed = kernel_of_inner(&p, v, &ctl).unwrap();
                let series = kernel_series(&p, v, &ctl).unwrap();
                worst = worst.max((closed - series).norm() / closed.norm());
            }
        }
    }
    (worst <= 1e-10, format!("max relative deviation {worst:.2e} over 6000 pairs (tol 1e-10)"))
}

fn criterion_2() -> Outcome {
    let ctl = SeriesControl { max_terms: 10_000_000, tail_tolerance: 1e-15 };
    let p = KernelParams::new(1, -2.0).unwrap();
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let v = c(i as f64 / 10.0, 0.0);
        let series = kernel_series(&p, v, &ctl).unwrap();
        let closed = -(c(1.0, 0.0) - v).ln() / v;
        worst = worst.max((series - closed).norm() / closed.norm());
    }
    let scan = kernel_bounds_scan(&KernelParams::new(1, -3.0f64).unwrap(), 60).unwrap();
    let bounded = matches!(scan.max_modulus, MaxBound::Finite(m) if m.is_finite());
    let ok = worst <= 1e-10 && bounded && scan.min_modulus > 0.0;
    (ok, format!("q=-2 max relative deviation {worst:.2e} (tol 1e-10); q=-3 max {:?}, min modulus {:.3e}", scan.max_modulus, scan.min_modulus))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut balls: Vec<Ball> = Vec::new();
    while balls.len() < 100 {
        let r0 = rng.random_range(0.05..0.98);
        let gap: f64 = 1.0 - r0;
        // radii beyond 1 swallow the whole ball, where no power model applies
        let big_r = (gap * rng.random_range(1.05..3.0)).min(1.0);
        balls.push(Ball::new(point_1d(r0, rng.random_range(0.0..std::f64::consts::TAU)), big_r).unwrap());
    }
    while balls.len() < 200 {
        let r0 = rng.random_range(0.1..0.98);
        let big_r = (1.0 - r0) * rng.random_range(0.05..0.95);
        balls.push(Ball::new(point_1d(r0, rng.random_range(0.0..std::f64::consts::TAU)), big_r).unwrap());
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for q in [0.0, 1.0] {
        for (i, b) in balls.iter().enumerate() {
            let mc = ball_measure_mc(b, q, 4000, 100 + i as u64).unwrap().value;
            let r = mc / ball_measure_model(b, q).unwrap();
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let big_c = hi.max(1.0 / lo);
    (big_c < 20.0, format!("ratios in [{lo:.3}, {hi:.3}], fitted C = {big_c:.2} (tol C < 20) over 400 cases"))
}

fn criterion_4() -> Outcome {
    let radii = DEFAULT_FR_RADII.to_vec();
    let mut ok = true;
    let mut notes = Vec::new();
    for (cc, d) in [(1.0, 0.0), (0.0, 1.0), (0.5, 0.0)] {
        let fit = forelli_rudin_exponent(cc, d, 1, &radii, 200_000, 4).unwrap();
        let target = f64::max(cc - d, 0.0);
        // 15% of the target, floored at 0.15 when the target exponent is 0
        let tol = (0.15 * target).max(if target == 0.0 { 0.15 } else { 0.0 });
        ok &= (fit.fitted_exponent - target).abs() <= tol && !fit.log_flag;
        notes.push(format!("({cc},{d}) -> {:.3} vs {target}", fit.fitted_exponent));
    }
    let fit = forelli_rudin_exponent(0.5, 0.5, 1, &radii, 200_000, 5).unwrap();
    ok &= fit.log_flag;
    notes.push(format!("log_flag at c=d: {}", fit.log_flag));
    (ok, notes.join("; "))
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (dim, z0) in [(1usize, vec![c(0.5, 0.2)]), (2, vec![c(0.3, 0.1), c(0.2, -0.25)])] {
        let z0 = Point::new(z0).unwrap();
        let mut alpha = vec![0u32; dim];
        alpha[0] = 1;
        for (name, f) in [("1", Polynomial::constant(dim, 1.0)), ("z1", Polynomial::monomial(alpha.clone()))] {
            let chk = projection_identity_check(0.0, 1.0, 0.0, 2.0, &f, &z0, 400_000, 6 + dim as u64).unwrap();
            let r = chk.ratio.unwrap();
            ok &= r.stderr < 0.02 && (r.value - 1.0).abs() <= 5.0 * r.stderr;
            notes.push(format!("N={dim} f={name}: {:.4}±{:.4}", r.value, r.stderr));
        }
    }
    (ok, format!("{} (tol 1±5σ, σ < 0.02)", notes.join("; ")))
}

fn criterion_6(cfg: &Config) -> Outcome {
    let reps = run_ids(cfg, &["norm_equivalence_unit", "norm_equivalence_standard", "norm_equivalence_divergent"]);
    let failed = failed_rules(&reps);
    let mut ok = failed.is_empty();
    let mut notes = Vec::new();
    for r in &reps[..2] {
        let rhs = value(r, "rhs");
        ok &= rhs.is_finite() && r.rule_named("ratio_stable").is_some_and(|x| x.passed);
        notes.push(format!("{}: rhs {rhs:.4}, ratio {:.4} -> {:.4}", r.scenario, value(r, "ratio"), value(r, "ratio_doubled")));
    }
    let unit = reps[0].find("ratio").expect("ratio row");
    let sigma = match unit.uncertainty {
        Uncertainty::StdErr(s) => s,
        _ => 0.0,
    };
    ok &= unit.value >= 1e-2 && unit.value <= 1.0 + 4.0 * sigma;
    let flipped = reps[2].find("rhs").is_some_and(|row| row.value.is_infinite() && row.verdict.as_deref() == Some("unbounded"));
    ok &= flipped;
    notes.push(format!("standard(1): verdict {}", if flipped { "unbounded" } else { "not flipped" }));
    if !failed.is_empty() {
        notes.push(format!("failed: {}", failed.join(", ")));
    }
    (ok, format!("{} (tol ratio in [1e-2, 1+4σ] for ω=1, factor 4 under doubling)", notes.join("; ")))
}

fn criterion_7(cfg: &Config) -> Outcome {
    let reps = run_ids(cfg, &["weak_type"]);
    let failed = failed_rules(&reps);
    let r = &reps[0];
    let detail = |n: &str| r.rule_named(n).map_or("missing".to_string(), |x| x.detail.clone());
    (failed.is_empty(), format!("weak growth {}; strong {}; failed [{}] (tol growth < 10%)", detail("weak_bounded"), detail("strong_grows"), failed.join(", ")))
}

fn criterion_8(cfg: &Config) -> Outcome {
    let reps = run_ids(cfg, &["good_lambda"]);
    let failed = failed_rules(&reps);
    let r = &reps[0];
    let (beta, r2) = (value(r, "beta"), value(r, "r_squared"));
    let ok = failed.is_empty() && beta > 0.0 && r2 > 0.8;
    (ok, format!("beta {beta:.3}, R² {r2:.3}; failed [{}] (tol beta > 0, R² > 0.8)", failed.join(", ")))
}

fn finite(v: ClassValue<f64>) -> f64 {
    match v {
        ClassValue::Finite(e) => e.value,
        ClassValue::Infinite => f64::INFINITY,
    }
}

fn criterion_9() -> Outcome {
    let th = VerdictThresholds::default();
    let mut ok = true;
    let mut notes = Vec::new();
    let specs = [
        ClassSpec::bp(1, 2.0, 0.0, Quantifier::BoundaryTouching).unwrap(),
        ClassSpec::dp(1, 2.0, 0.0, 0.0, 0.0, 0.0).unwrap(),
        ClassSpec::kp(1, 2.0, 0.5, 0.5, 0.0, 1.0).unwrap(),
    ];
    let mut members = 0;
    for spec in &specs {
        let (lo, hi) = spec.standard_exponent_range();
        let mut weights = vec![Weight::one()];
        weights.extend([0.25, 0.5, 0.75].iter().map(|x| Weight::Standard(lo + (hi - lo) * x)));
        for w in weights {
            let rep = class_constant_estimate(spec, &w, &default_family(spec, 6), 6_000, 9).unwrap();
            let v = membership_verdict(&rep, &th);
            if v == Verdict::Member {
                members += 1;
            } else {
                ok = false;
                notes.push(format!("{spec:?} {w}: {v:?}"));
            }
        }
    }
    notes.insert(0, format!("{members}/12 member verdicts"));

    let bp = ClassSpec::bp(1, 2.0, 0.0, Quantifier::Closure).unwrap();
    let w = Weight::Standard(-2.0);
    let rep = class_constant_estimate(&bp, &w, &default_family(&bp, 6), 6_000, 10).unwrap();
    // almost-touching balls keep every quantity finite; fit log value against log R across them
    let near = class_constant_estimate(&bp, &w, &BallFamily::almost_touching(1, 7), 20_000, 11).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = near.per_ball.iter().map(|(b, v)| (b.radius.ln(), finite(*v).ln())).unzip();
    let slope = fit_line(&x, &y).map_or(f64::NAN, |f| f.slope);
    let non_member = membership_verdict(&rep, &th) == Verdict::NonMember;
    ok &= non_member && slope < 0.0;
    notes.push(format!(
        "(B_2) standard(-2): {} (closure slope {:?}), almost-touching slope {slope:.3}",
        if non_member { "non_member" } else { "not rejected" },
        rep.divergence_slope
    ));

    let mut worst = 0.0f64;
    let w = Weight::Standard(0.3);
    for (s, t, q) in [(0.5, 0.2, 0.0), (0.0, -0.5, 0.5), (1.0, 1.0, -0.5)] {
        let kp = ClassSpec::kp(1, 2.0, s, t, q, q).unwrap();
        let dp = ClassSpec::dp(1, 2.0, s, t, q, q).unwrap();
        for (i, b) in BallFamily::<f64>::dyadic(1, 5).balls.iter().enumerate() {
            let a = finite(ball_class_quantity(&kp, &w, b, 5_000, i as u64).unwrap());
            let d = finite(ball_class_quantity(&dp, &w, b, 5_000, i as u64).unwrap());
            worst = worst.max((a - d).abs() / a);
        }
    }
    ok &= worst <= 1e-6;
    notes.push(format!("Kp vs Dp at Q=q: max relative gap {worst:.1e} (tol 1e-6)"));
    (ok, notes.join("; "))
}

fn criterion_10(cfg: &Config) -> Outcome {
    let ids = ["no_weights_chain", "no_weights_shifted_chain", "no_weights_boundary_growth", "projection_no_weights", "shifted_no_weights"];
    let reps = run_ids(cfg, &ids);
    let failed = failed_rules(&reps);
    let slopes: Vec<f64> = reps.iter().flat_map(|r| r.rows.iter().filter(|x| x.quantity.ends_with(":divergence_slope")).map(|x| x.value)).collect();
    let worst = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = failed.is_empty() && !slopes.is_empty() && worst < -0.05;
    (ok, format!("{} weights over {} regimes, largest slope {worst:.3} (tol < -0.05); failed [{}]", slopes.len(), ids.len(), failed.join(", ")))
}

/// `|1 - <w, ζ>|^{-α}` with `ζ = e^{iθ}`.
fn pole(theta: f64, alpha: f64) -> Integrand<f64> {
    let zeta = Complex::from_polar(1.0, theta);
    Integrand::real(move |w: &Point| (c(1.0, 0.0) - w.coords()[0] * zeta.conj()).norm().powf(-alpha))
}

fn test_pairs(seed: u64, count: usize) -> Vec<(Integrand<f64>, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let f = match rng.random_range(0..3) {
                0 => pole(theta, rng.random_range(0.1..0.6)),
                1 => {
                    let a = Complex::from_polar(rng.random_range(0.0..0.9), theta);
                    Integrand::real(move |w: &Point| 1.0 + (w.coords()[0] * a.conj()).re)
                }
                _ => {
                    let eta = rng.random_range(-0.5..1.0);
                    Integrand::real(move |w: &Point| w.defect().powf(eta)).with_decay(eta)
                }
            };
            let z = point_1d(rng.random_range(0.0..0.97), rng.random_range(0.0..std::f64::consts::TAU));
            (f, z)
        })
        .collect()
}

fn stable(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a.max(b) < 2.0 * a.min(b)
}

/// `max m f(z) / m(R_k f)(z)` over the pairs.
fn lemma_domination(kind: &MaximalKind, k: f64, pairs: &[(Integrand<f64>, Point)], n: usize) -> f64 {
    let p = RegularizationParams::new(k).unwrap();
    pairs
        .iter()
        .enumerate()
        .map(|(i, (f, z))| {
            let g = f.clone();
            let reg = Integrand::real(move |w: &Point| regularize(Regularization::Rkb { b: 0.0 }, p, &|x: &Point| g.eval(x).norm(), w, 32, 7).unwrap().value);
            let lhs = maximal_value(kind, f, z, None, n, 100 + i as u64).unwrap().value.value;
            let rhs = maximal_value(kind, &reg, z, None, n, 200 + i as u64).unwrap().value.value;
            lhs / rhs
        })
        .fold(0.0, f64::max)
}

/// `(min, max)` of `R_k(m g)(z) / m g(z)`.
fn lemma_sandwich(k: f64, pairs: &[(Integrand<f64>, Point)], n: usize) -> (f64, f64) {
    let p = RegularizationParams::new(k).unwrap();
    let kind = MaximalKind::Boundary { a: 0.0, b: 0.0 };
    let ratios: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, (g, z))| {
            let mg = |w: &Point| maximal_value(&kind, g, w, None, n, 300 + i as u64).unwrap().value.value;
            regularize(Regularization::Rkb { b: 0.0 }, p, &mg, z, 24, 400 + i as u64).unwrap().value / mg(z)
        })
        .collect();
    (ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(0.0, f64::max))
}

/// `max ∫ f R_k^b g dmu_Q / ∫ g R_{k'}^{b,Q} f dmu_b` over pairs.
fn lemma_duality(k: f64, fs: &[Integrand<f64>], n: usize) -> f64 {
    let p = RegularizationParams::new(k).unwrap();
    let pk = p.primed().unwrap();
    let (b, big_q) = (0.0, 1.0);
    let s = Samples::whole(1, 0.0, n, 21).unwrap();
    fs.iter()
        .zip(fs.iter().rev())
        .map(|(f, g)| {
            let fa = |w: &Point| f.eval(w).norm();
            let ga = |w: &Point| g.eval(w).norm();
            let lhs = s.integrate(|w| fa(w) * regularize(Regularization::Rkb { b }, p, &ga, w, 32, 22).unwrap().value * w.defect().powf(big_q));
            let rhs = s.integrate(|w| ga(w) * regularize(Regularization::RkbQ { b, big_q }, pk, &fa, w, 32, 23).unwrap().value * w.defect().powf(b));
            lhs.value / rhs.value
        })
        .fold(0.0, f64::max)
}

fn criterion_11() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let pairs = test_pairs(11, 50);
    let few = test_pairs(12, 12);
    let fs: Vec<Integrand<f64>> = few.iter().map(|x| x.0.clone()).collect();
    for k in [0.1, 0.25] {
        for (name, kind) in [("m", MaximalKind::Boundary { a: 0.0, b: 0.0 }), ("m'", MaximalKind::BoundaryRadial { a: -0.5, b: 0.0 })] {
            let (c1, c2) = (lemma_domination(&kind, k, &pairs, 256), lemma_domination(&kind, k, &pairs, 512));
            ok &= stable(c1, c2);
            notes.push(format!("domination {name} k={k}: C {c1:.3} -> {c2:.3}"));
        }
        let ((l1, h1), (l2, h2)) = (lemma_sandwich(k, &few, 128), lemma_sandwich(k, &few, 256));
        ok &= stable(l1, l2) && stable(h1, h2);
        notes.push(format!("sandwich k={k}: [{l1:.3}, {h1:.3}] -> [{l2:.3}, {h2:.3}]"));
        let (d1, d2) = (lemma_duality(k, &fs, 1000), lemma_duality(k, &fs, 2000));
        ok &= stable(d1, d2);
        notes.push(format!("duality k={k}: C {d1:.3} -> {d2:.3}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (s, t, beta) = (0.0, 0.5, 1.0);
    let mut worst = 0.0f64;
    let mut fitted = [0.0f64; 2];
    for i in 0..20 {
        let r0 = rng.random_range(0.6..0.97);
        let big_r = (1.0 - r0) * rng.random_range(1.2..3.0);
        let z0 = point_1d(r0, 0.0);
        let z = loop {
            let cand = point_1d(rng.random_range((r0 - big_r).max(0.0)..0.99), rng.random_range(-1.0..1.0) * big_r);
            if Ball::new(z0.clone(), big_r).unwrap().contains(&cand) {
                break cand;
            }
        };
        let f = pole(rng.random_range(-0.5..0.5), rng.random_range(0.0..0.6));
        for (j, n) in [10_000usize, 20_000].into_iter().enumerate() {
            let tb = tail_bound_ratio(s, t, &z0, big_r, &f, &z, beta, n, 500 + i).unwrap();
            worst = worst.max(tb.ratio / tb.proof_constant);
            fitted[j] = fitted[j].max(tb.ratio);
        }
    }
    ok &= worst <= 1.0 && stable(fitted[0], fitted[1]);
    notes.push(format!("tail bound: max ratio/A {worst:.3} (tol <= 1), fitted A {:.3} -> {:.3}", fitted[0], fitted[1]));
    (ok, format!("{} (tol < 2x under doubling)", notes.join("; ")))
}

fn main() {
    let cfg = suite();
    type Check<'a> = (&'a str, u64, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("kernel agreement", 10, Box::new(criterion_1)),
        ("hypergeometric branch", 10, Box::new(criterion_2)),
        ("ball-measure model", 120, Box::new(criterion_3)),
        ("Forelli-Rudin exponents", 300, Box::new(criterion_4)),
        ("projection identity", 300, Box::new(criterion_5)),
        ("norm equivalence for T_{a,b}", 600, Box::new(|| criterion_6(&cfg))),
        ("weak type (1,1)", 600, Box::new(|| criterion_7(&cfg))),
        ("good-lambda inequality", 600, Box::new(|| criterion_8(&cfg))),
        ("class machinery", 300, Box::new(criterion_9)),
        ("nonexistence probes", 300, Box::new(|| criterion_10(&cfg))),
        ("maximal lemmas", 600, Box::new(criterion_11)),
    ];
    let mut all = true;
    for (i, (name, limit, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let pass = ok && in_time;
        all &= pass;
        println!("{} [{:>2}] {name}: {detail}; {:.1} s (limit {limit} s)", if pass { "PASS" } else { "FAIL" }, i + 1, elapsed.as_secs_f64());
    }
    if !all {
        std::process::exit(1);
    }
}
