//! Pointwise evaluation of the integral operators `T_{a,b}`, `S_{a,b}`, `P_{s,t}`
//! and the checks built on them.
//!
//! `T_{a,b} f(z) = ∫ K_a(z,w) f(w) dmu_b(w)`, `S_{a,b}` uses `|K_a||f|`, and
//! `P_{s,t} f(z) = (1-|z|^2)^t T_{s+t,s} f(z)`.

use std::sync::Mutex;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{pseudo_distance, BallPoint, PseudoBall};
use crate::integration::{lp_norm_on, MCEstimate};
use crate::kernels::{apply_i_st, kernel_of_inner, KernelParams, Polynomial, SeriesControl};
use crate::sampling::Samples;
use crate::scalar::{lit, to_f64, Real};
use crate::weights::{dual_weight, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    T,
    S,
    P,
}

/// An operator with its source space `L^p(ω dmu_q)` and target `L^p(ω dmu_Q)`.
#[derive(Clone, Debug)]
pub struct OperatorSpec<T: Real> {
    pub kind: OperatorKind,
    pub dim: usize,
    /// `(a, b)` for `T` and `S`, `(s, t)` for `P`.
    pub params: (T, T),
    pub p: T,
    pub q: T,
    pub big_q: T,
    pub weight: Weight<T>,
}

impl<T: Real> OperatorSpec<T> {
    fn build(kind: OperatorKind, dim: usize, params: (T, T)) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        let measure = match kind {
            OperatorKind::T | OperatorKind::S => params.1,
            OperatorKind::P => params.0,
        };
        if !(measure > -T::one()) {
            return Err(Error::InvalidParameter(format!("measure exponent {measure} must exceed -1")));
        }
        Ok(Self { kind, dim, params, p: lit(2.0), q: T::zero(), big_q: T::zero(), weight: Weight::one() })
    }

    pub fn t(dim: usize, a: T, b: T) -> Result<Self> {
        Self::build(OperatorKind::T, dim, (a, b))
    }

    pub fn s(dim: usize, a: T, b: T) -> Result<Self> {
        Self::build(OperatorKind::S, dim, (a, b))
    }

    pub fn p(dim: usize, s: T, t: T) -> Result<Self> {
        Self::build(OperatorKind::P, dim, (s, t))
    }

    /// Sets the Lebesgue data; `p >= 1` (the weak-type endpoint `p = 1` is admitted).
    pub fn with_spaces(mut self, p: T, q: T, big_q: T, weight: Weight<T>) -> Result<Self> {
        if !(p >= T::one()) {
            return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
        }
        self.p = p;
        self.q = q;
        self.big_q = big_q;
        self.weight = weight;
        Ok(self)
    }

    /// Kernel exponent and integration measure exponent of the underlying `T_{a,b}`.
    pub fn kernel_and_measure(&self) -> (T, T) {
        match self.kind {
            OperatorKind::T | OperatorKind::S => self.params,
            OperatorKind::P => (self.params.0 + self.params.1, self.params.0),
        }
    }
}

/// Inputs to the operators.
#[derive(Clone, Debug)]
pub enum TestFunction<T: Real> {
    /// `(1-|z|^2)^β χ_B(z)`.
    Indicator { ball: PseudoBall<T>, beta: T },
    /// `ω(z)^{-1/(p-1)} (1-|z|^2)^e`, optionally cut to a ball.
    Dual { weight: Weight<T>, p: T, exponent: T, support: Option<PseudoBall<T>> },
    /// A holomorphic polynomial.
    Polynomial(Polynomial<T>),
    /// `(1-|w|^2)^{-b} χ_{B(0,R)}(w)`.
    KernelWindow { b: T, radius: T },
}

impl<T: Real> TestFunction<T> {
    pub fn monomial(alpha: Vec<u32>) -> Self {
        Self::Polynomial(Polynomial::monomial(alpha))
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::Polynomial(Polynomial::constant(dim, c))
    }

    /// The extremal function `ω^{-1/(p-1)}(1-|z|^2)^{(p'-1)(b-q)} χ_B`.
    pub fn extremal(weight: &Weight<T>, p: T, b: T, q: T, support: Option<PseudoBall<T>>) -> Self {
        let pp = p / (p - T::one());
        Self::Dual { weight: weight.clone(), p, exponent: (pp - T::one()) * (b - q), support }
    }

    pub fn eval(&self, w: &BallPoint<T>) -> Complex<T> {
        let real = |x: T| Complex::new(x, T::zero());
        match self {
            Self::Indicator { ball, beta } => {
                if ball.contains(w) {
                    real(w.defect().powf(*beta))
                } else {
                    real(T::zero())
                }
            }
            Self::Dual { weight, p, exponent, support } => {
                if support.as_ref().is_none_or(|b| b.contains(w)) {
                    let d = weight.eval(w).powf(-T::one() / (*p - T::one()));
                    real(d * w.defect().powf(*exponent))
                } else {
                    real(T::zero())
                }
            }
            Self::Polynomial(f) => f.eval(w),
            Self::KernelWindow { b, radius } => {
                if w.modulus() < *radius {
                    real(w.defect().powf(-*b))
                } else {
                    real(T::zero())
                }
            }
        }
    }

    /// Ball outside which the function vanishes.
    pub fn support(&self, dim: usize) -> Option<PseudoBall<T>> {
        match self {
            Self::Indicator { ball, .. } => Some(ball.clone()),
            Self::Dual { support, .. } => support.clone(),
            Self::Polynomial(_) => None,
            Self::KernelWindow { radius, .. } => PseudoBall::new(BallPoint::origin(dim), *radius).ok(),
        }
    }

    /// `e` with `|f(z)| ~ (1-|z|^2)^e` at the sphere, when known.
    pub fn boundary_exponent(&self) -> Option<T> {
        match self {
            Self::Indicator { beta, .. } => Some(*beta),
            Self::Dual { weight, p, exponent, .. } => dual_weight(weight, *p).ok()?.boundary_exponent().map(|e| e + *exponent),
            Self::Polynomial(_) => Some(T::zero()),
            Self::KernelWindow { .. } => Some(T::zero()),
        }
    }

    /// True when the support stays a positive distance from the sphere.
    pub fn compactly_supported(&self, dim: usize) -> bool {
        self.support(dim).is_some_and(|b| to_f64(b.center.modulus() + b.radius) < 1.0)
    }

    /// `||f||_{L^p(ω dmu_q)}`; errors when the norm is infinite.
    pub fn source_norm(&self, p: T, w: &Weight<T>, q: T, dim: usize, n: usize, seed: u64) -> Result<MCEstimate<T>> {
        let kappa = if self.compactly_supported(dim) {
            to_f64(q).max(0.0)
        } else {
            let e = match (self.boundary_exponent(), w.boundary_exponent()) {
                (Some(a), Some(b)) => a * p + b + q,
                _ => q,
            };
            if !(e > -T::one()) {
                return Err(Error::Divergent(format!("||f||_p with boundary exponent {e}")));
            }
            to_f64(e)
        };
        let s = self.samples(dim, None, kappa, n, seed)?;
        Ok(lp_norm_on(&s, |z| self.eval(z).norm(), p, w, q))
    }

    fn samples(&self, dim: usize, focus: Option<&BallPoint<T>>, kappa: f64, n: usize, seed: u64) -> Result<Samples<T>> {
        match self.support(dim) {
            Some(b) => {
                let kappa = if to_f64(b.center.modulus() + b.radius) >= 1.0 { kappa } else { kappa.max(0.0) };
                Samples::ball(&b, kappa, n, seed)
            }
            None => match focus {
                Some(z) => Samples::focused(z, kappa, n, seed),
                None => Samples::whole(dim, kappa, n, seed),
            },
        }
    }
}

/// Sampling exponent for `∫ |K f| dmu_b` with the boundary behaviour of `f`.
fn operator_kappa<T: Real>(f: &TestFunction<T>, b: T, dim: usize) -> Result<f64> {
    if f.compactly_supported(dim) {
        return Ok(0.0);
    }
    let e = b + f.boundary_exponent().unwrap_or(T::zero());
    if !(e > -T::one()) {
        return Err(Error::Divergent(format!("∫ f dmu_b diverges at the sphere (exponent {e})")));
    }
    Ok(to_f64(e))
}

/// Runs `body` with a kernel evaluator that records the first series failure.
fn with_kernel<T: Real, R>(a: T, dim: usize, body: impl FnOnce(&(dyn Fn(Complex<T>) -> Complex<T> + Sync)) -> R) -> Result<R> {
    let params = KernelParams::new(dim, a)?;
    let ctl = SeriesControl::default();
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let k = |v: Complex<T>| match kernel_of_inner(&params, v, &ctl) {
        Ok(x) => x,
        Err(e) => {
            failure.lock().expect("kernel failure lock").get_or_insert(e);
            Complex::new(T::nan(), T::nan())
        }
    };
    let out = body(&k);
    match failure.into_inner().expect("kernel failure lock") {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn operator_samples<T: Real>(spec: &OperatorSpec<T>, f: &TestFunction<T>, z: &BallPoint<T>, n: usize, seed: u64) -> Result<Samples<T>> {
    if z.dim() != spec.dim {
        return Err(Error::Dimension { expected: spec.dim, got: z.dim() });
    }
    let (_, b) = spec.kernel_and_measure();
    let kappa = operator_kappa(f, b, spec.dim)?;
    f.samples(spec.dim, Some(z), kappa, n, seed)
}

fn t_on<T: Real>(a: T, b: T, f: &TestFunction<T>, z: &BallPoint<T>, s: &Samples<T>) -> Result<MCEstimate<T, Complex<T>>> {
    with_kernel(a, z.dim(), |k| s.integrate_complex(|w| k(z.inner(w)) * f.eval(w) * w.defect().powf(b)))
}

fn s_on<T: Real>(a: T, b: T, f: &TestFunction<T>, z: &BallPoint<T>, s: &Samples<T>) -> Result<MCEstimate<T>> {
    with_kernel(a, z.dim(), |k| s.integrate(|w| k(z.inner(w)).norm() * f.eval(w).norm() * w.defect().powf(b)))
}

/// `T_{a,b} f(z)` with `(a, b)` from the operator spec (`(s+t, s)` for `P`).
pub fn apply_t<T: Real>(spec: &OperatorSpec<T>, f: &TestFunction<T>, z: &BallPoint<T>, n: usize, seed: u64) -> Result<MCEstimate<T, Complex<T>>> {
    let s = operator_samples(spec, f, z, n, seed)?;
    let (a, b) = spec.kernel_and_measure();
    t_on(a, b, f, z, &s)
}

/// `S_{a,b} f(z)`.
pub fn apply_s<T: Real>(spec: &OperatorSpec<T>, f: &TestFunction<T>, z: &BallPoint<T>, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    let s = operator_samples(spec, f, z, n, seed)?;
    let (a, b) = spec.kernel_and_measure();
    s_on(a, b, f, z, &s)
}

/// `|T f(z)|` and `S f(z)` on one shared sample.
pub fn apply_t_and_s<T: Real>(
    spec: &OperatorSpec<T>,
    f: &TestFunction<T>,
    z: &BallPoint<T>,
    n: usize,
    seed: u64,
) -> Result<(MCEstimate<T, Complex<T>>, MCEstimate<T>)> {
    let s = operator_samples(spec, f, z, n, seed)?;
    let (a, b) = spec.kernel_and_measure();
    Ok((t_on(a, b, f, z, &s)?, s_on(a, b, f, z, &s)?))
}

fn p_spec<T: Real>(spec: &OperatorSpec<T>) -> Result<(T, T)> {
    if spec.kind != OperatorKind::P {
        return Err(Error::InvalidParameter("apply_p needs a P_{s,t} spec".into()));
    }
    Ok(spec.params)
}

/// `P_{s,t} f(z) = (1-|z|^2)^t T_{s+t,s} f(z)`.
pub fn apply_p<T: Real>(spec: &OperatorSpec<T>, f: &TestFunction<T>, z: &BallPoint<T>, n: usize, seed: u64) -> Result<MCEstimate<T, Complex<T>>> {
    let (_, t) = p_spec(spec)?;
    Ok(apply_t(spec, f, z, n, seed)?.scale(z.defect().powf(t)))
}

/// `∫ H_{s,t}(z,w) f(w) dmu_s(w)` with `H_{s,t}(z,w) = (1-|z|^2)^t / (1-<z,w>)^{N+1+s+t}`
/// evaluated inside the integral.
pub fn apply_p_direct<T: Real>(spec: &OperatorSpec<T>, f: &TestFunction<T>, z: &BallPoint<T>, n: usize, seed: u64) -> Result<MCEstimate<T, Complex<T>>> {
    let (s_exp, t) = p_spec(spec)?;
    let samples = operator_samples(spec, f, z, n, seed)?;
    let zt = z.defect().powf(t);
    with_kernel(s_exp + t, z.dim(), |k| samples.integrate_complex(|w| k(z.inner(w)) * zt * f.eval(w) * w.defect().powf(s_exp)))
}

/// Condition (3) of the unweighted `L^p_q -> L^P_Q` characterization of `T_{a,b}` and `S_{a,b}`.
/// `big_p = ∞` is passed as `f64::INFINITY`.
pub fn boundedness_predicate(a: f64, b: f64, q: f64, big_q: f64, p: f64, big_p: f64, dim: usize) -> Result<bool> {
    if !(p >= 1.0 && p <= big_p) || p.is_infinite() {
        return Err(Error::InvalidParameter(format!("need 1 <= p <= P with p finite, got p={p}, P={big_p}")));
    }
    if big_p.is_finite() && !(big_q > -1.0) {
        return Err(Error::InvalidParameter(format!("Q = {big_q} must exceed -1 when P < ∞")));
    }
    let n1 = 1.0 + dim as f64;
    let lhs1 = (1.0 + q) / p;
    let rhs1 = 1.0 + b;
    let rhs2 = b + if big_p.is_finite() { (n1 + big_q) / big_p } else { 0.0 } - (n1 + q) / p;
    Ok(if p == 1.0 {
        lhs1 <= rhs1 && a <= rhs2 && (lhs1 < rhs1 || a < rhs2)
    } else if big_p.is_finite() {
        lhs1 < rhs1 && a <= rhs2
    } else {
        lhs1 < rhs1 && a < rhs2
    })
}

/// `∫_{d(z,w0) > C2 d(w,w0)} |H_{s,t}(z,w) - H_{s,t}(z,w0)| dmu_q(z)`.
pub fn hormander_integral<T: Real>(s: T, t: T, q: T, w: &BallPoint<T>, w0: &BallPoint<T>, c2: T, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    if w.dim() != w0.dim() {
        return Err(Error::Dimension { expected: w0.dim(), got: w.dim() });
    }
    let kappa = q + t;
    if !(kappa > -T::one()) {
        return Err(Error::Divergent(format!("Hörmander integral with q + t = {kappa}")));
    }
    let samples = Samples::focused(w0, to_f64(kappa), n, seed)?;
    let threshold = c2 * pseudo_distance(w, w0);
    with_kernel(s + t, w.dim(), |k| {
        samples.integrate(|z| {
            if pseudo_distance(z, w0) <= threshold {
                return T::zero();
            }
            let zt = z.defect().powf(t);
            (k(z.inner(w)) - k(z.inner(w0))).norm() * zt * z.defect().powf(q)
        })
    })
}

/// `|K_a(z,w) - K_a(z,w0)| |1-<z,w0>|^{N+a+2} / d(w,w0)`, or `None` when
/// `|1-<z,w0>| <= c1 d(w,w0)` (outside the admissible region).
pub fn kernel_difference_ratio<T: Real>(a: T, c1: T, z: &BallPoint<T>, w: &BallPoint<T>, w0: &BallPoint<T>) -> Result<Option<T>> {
    let dw = pseudo_distance(w, w0);
    let one = Complex::new(T::one(), T::zero());
    let gap = (one - z.inner(w0)).norm();
    if dw == T::zero() || gap <= c1 * dw {
        return Ok(None);
    }
    let params = KernelParams::new(z.dim(), a)?;
    let ctl = SeriesControl::default();
    let diff = (kernel_of_inner(&params, z.inner(w), &ctl)? - kernel_of_inner(&params, z.inner(w0), &ctl)?).norm();
    let e = lit::<T>(z.dim() as f64 + 2.0) + a;
    Ok(Some(diff * gap.powf(e) / dw))
}

/// Maximum of [`kernel_difference_ratio`] over random admissible triples.
pub fn fit_kernel_difference_constant<T: Real>(a: T, c1: T, dim: usize, triples: usize, seed: u64) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::zero();
    let mut found = 0usize;
    let mut attempts = 0usize;
    while found < triples {
        attempts += 1;
        if attempts > 100 * triples {
            return Err(Error::RejectionBudget { attempts });
        }
        let z = crate::geometry::probe_point::<T, _>(dim, &mut rng);
        let w0 = crate::geometry::probe_point::<T, _>(dim, &mut rng);
        let w = if rng.random::<bool>() { crate::geometry::perturb(&w0, &mut rng) } else { crate::geometry::probe_point(dim, &mut rng) };
        if let Some(r) = kernel_difference_ratio(a, c1, &z, &w, &w0)? {
            found += 1;
            best = best.max(r);
        }
    }
    Ok(best)
}

/// Outcome of comparing `P_s(I_s^t f)(z0)` with `N!/(1+s+t)_N f(z0)`.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionCheck<T: Real> {
    pub lhs: MCEstimate<T, Complex<T>>,
    pub rhs: Complex<T>,
    /// `lhs / rhs` (real part); `None` when `f(z0) = 0`.
    pub ratio: Option<MCEstimate<T>>,
    /// `q + 1 < p(s + 1)` for the `p` supplied.
    pub in_regime: bool,
}

/// `N!/(1+s+t)_N`.
pub fn projection_constant<T: Real>(dim: usize, s: T, t: T) -> T {
    (1..=dim).fold(T::one(), |acc, j| {
        let j: T = lit(j as f64);
        acc * j / (s + t + j)
    })
}

/// Evaluates `P_s(I_s^t f)(z0)` by quadrature, with `P_s = T_{s,s}`, against the closed form.
pub fn projection_identity_check<T: Real>(s: T, t: T, q: T, p: T, f: &Polynomial<T>, z0: &BallPoint<T>, n: usize, seed: u64) -> Result<ProjectionCheck<T>> {
    if !(s > -T::one()) || !(s + t > -T::one()) {
        return Err(Error::InvalidParameter(format!("need s > -1 and s + t > -1, got s={s}, t={t}")));
    }
    let samples = Samples::focused(z0, to_f64(s + t), n, seed)?;
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let lhs = with_kernel(s, z0.dim(), |k| {
        samples.integrate_complex(|w| match apply_i_st(f, s, t, w) {
            Ok(g) => k(z0.inner(w)) * g * w.defect().powf(s),
            Err(e) => {
                failure.lock().expect("lock").get_or_insert(e);
                Complex::new(T::nan(), T::nan())
            }
        })
    })?;
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let rhs = f.eval(z0) * projection_constant(z0.dim(), s, t);
    let ratio = if rhs.norm() > T::zero() {
        let r = lhs.value / rhs;
        Some(MCEstimate { value: r.re, stderr: lhs.stderr / rhs.norm(), n_samples: lhs.n_samples, seed: lhs.seed })
    } else {
        None
    };
    Ok(ProjectionCheck { lhs, rhs, ratio, in_regime: q + T::one() < p * (s + T::one()) })
}

/// Interpolated strong-type constant from weak-type constants at `p0 < pt < p1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolatedNorm {
    /// `2[p_t(A0^{p0}/(p_t-p0) - A1^{p1}/(p1-p_t))]^{1/p_t}`; `None` when the bracket is not positive.
    pub literal: Option<f64>,
    /// Same with `+` in place of `-`.
    pub plus: f64,
}

impl InterpolatedNorm {
    /// The literal value when defined, otherwise the `+` variant.
    pub fn best(&self) -> f64 {
        self.literal.unwrap_or(self.plus)
    }

    pub fn literal_flagged(&self) -> bool {
        self.literal.is_none()
    }
}

pub fn interpolated_norm(a0: f64, a1: f64, p0: f64, p1: f64, pt: f64) -> Result<InterpolatedNorm> {
    if !(p0 >= 1.0 && p0 < pt && pt < p1) {
        return Err(Error::InvalidParameter(format!("need 1 <= p0 < pt < p1, got {p0}, {pt}, {p1}")));
    }
    let first = a0.powf(p0) / (pt - p0);
    if p1.is_infinite() {
        let v = 2.0 * (pt * first).powf(1.0 / pt);
        return Ok(InterpolatedNorm { literal: Some(v), plus: v });
    }
    let second = a1.powf(p1) / (p1 - pt);
    let minus = pt * (first - second);
    Ok(InterpolatedNorm { literal: (minus > 0.0).then(|| 2.0 * minus.powf(1.0 / pt)), plus: 2.0 * (pt * (first + second)).powf(1.0 / pt) })
}

/// Ball of the same radius and modulus as `b`, rotated so its center is at
/// pseudo-distance `separation · R` from the center of `b`.
pub fn paired_ball<T: Real>(b: &PseudoBall<T>, separation: T) -> Result<PseudoBall<T>> {
    let r = b.center.modulus();
    let gap = separation * b.radius;
    if !(gap < lit(2.0)) {
        return Err(Error::InvalidParameter(format!("separation {gap} exceeds the sphere")));
    }
    let theta = lit::<T>(2.0) * (gap / lit(2.0)).asin();
    let dir = b.center.direction().ok_or_else(|| Error::InvalidParameter("ball centered at the origin".into()))?;
    let rot = Complex::new(theta.cos(), theta.sin());
    let mut coords = dir;
    coords[0] = coords[0] * rot;
    let c = BallPoint::new(coords.into_iter().map(|x| x * r).collect::<Vec<_>>())?;
    PseudoBall::new(c, b.radius)
}

/// Smallest `|T_{a,b} f(z)| R^{N+1+a} / ∫_{B_i} f dmu_b` over sample points `z` of `b_j`,
/// where `f` is supported in `b_i`.
pub fn lower_bound_constant<T: Real>(
    a: T,
    b: T,
    f: &TestFunction<T>,
    b_i: &PseudoBall<T>,
    b_j: &PseudoBall<T>,
    points: usize,
    n: usize,
    seed: u64,
) -> Result<T> {
    let dim = b_i.dim();
    let kappa = operator_kappa(f, b, dim)?;
    let samples = Samples::ball(b_i, kappa, n, seed)?;
    let mass = samples.integrate(|w| f.eval(w).norm() * w.defect().powf(b)).value;
    if !(mass > T::zero()) {
        return Err(Error::InvalidParameter("test function has no mass on the ball".into()));
    }
    let scale = b_i.radius.powf(lit::<T>(dim as f64 + 1.0) + a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut best = T::infinity();
    for _ in 0..points {
        let z = crate::geometry::sample_ball_with(b_j, &mut rng)?;
        let v = t_on(a, b, f, &z, &samples)?.value.norm();
        best = best.min(v * scale / mass);
    }
    Ok(best)
}
