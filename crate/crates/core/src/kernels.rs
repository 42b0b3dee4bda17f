//! Bergman-Besov kernels `K_q`, their coefficients and the maps `D_s^t`, `I_s^t`.

use std::num::NonZeroUsize;
use std::ops::Neg;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use num_complex::Complex;
use num_traits::{FromPrimitive, Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::geometry::BallPoint;
use crate::scalar::{lit, to_f64, Real};

/// Ordered field the coefficient formulas are generic over (floats, rationals).
pub trait Field: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Neg<Output = Self> {}
impl<F: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Neg<Output = F>> Field for F {}

fn int<F: Field>(k: usize) -> F {
    F::from_usize(k).expect("integer representable")
}

/// Dimension and kernel parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams<F> {
    pub dim: usize,
    pub q: F,
}

impl<F: Field> KernelParams<F> {
    pub fn new(dim: usize, q: F) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(Self { dim, q })
    }

    /// `q > -(N+1)`: the kernel is a power of `1 - <z,w>`.
    pub fn is_power_branch(&self) -> bool {
        is_power_branch(self.dim, self.q.clone())
    }
}

fn is_power_branch<F: Field>(dim: usize, a: F) -> bool {
    a > -int::<F>(dim + 1)
}

/// Truncation control for kernel series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    /// Bound on the neglected tail relative to the magnitude of the partial sum.
    pub tail_tolerance: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { max_terms: 1_000_000, tail_tolerance: 1e-12 }
    }
}

/// Rising factorial `(u)_k = u (u+1) ... (u+k-1)`.
pub fn pochhammer<F: Field>(u: F, k: usize) -> F {
    let mut acc = F::one();
    let mut x = u;
    for _ in 0..k {
        acc = acc * x.clone();
        x = x + F::one();
    }
    acc
}

/// `c_k(a)`: `(N+1+a)_k / k!` for `a > -(N+1)`, else `k! / (1-N-a)_k`.
pub fn coeff_c<F: Field>(params: &KernelParams<F>, a: F, k: usize) -> F {
    let dim = params.dim;
    let mut acc = F::one();
    if is_power_branch(dim, a.clone()) {
        let base = int::<F>(dim) + a;
        for j in 1..=k {
            acc = acc * (base.clone() + int(j)) / int(j);
        }
    } else {
        let base = -int::<F>(dim) - a;
        for j in 1..=k {
            acc = acc * int(j) / (base.clone() + int(j));
        }
    }
    acc
}

/// `d_k(s,t) = c_k(s+t) / c_k(s)`.
pub fn diff_coeff<F: Field>(s: F, t: F, params: &KernelParams<F>, k: usize) -> Result<F> {
    let den = coeff_c(params, s.clone(), k);
    if den == F::zero() {
        return Err(Error::DegenerateCoefficient { param: s.to_f64().unwrap_or(f64::NAN), k });
    }
    Ok(coeff_c(params, s + t, k) / den)
}

/// `Σ_k (alpha)_k / (beta)_k v^k` with a rigorous geometric tail bound.
fn ratio_series<T: Real>(alpha: T, beta: T, v: Complex<T>, ctl: &SeriesControl) -> Result<Complex<T>> {
    let av = v.norm();
    if !(av < T::one()) {
        return Err(Error::InvalidParameter(format!("series argument |v| = {av} must be < 1")));
    }
    let tol: T = lit(ctl.tail_tolerance);
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    let mut tail = T::infinity();
    for k in 0..ctl.max_terms {
        let kk: T = lit(k as f64);
        let ratio = (alpha + kk) / (beta + kk);
        // Ratios (alpha+j)/(beta+j) for j >= k are bounded by max(1, ratio).
        let rho = av * ratio.abs().max(T::one());
        if rho < T::one() {
            tail = term.norm() * rho / (T::one() - rho);
            if tail <= tol * sum.norm().max(T::min_positive_value()) {
                return Ok(sum);
            }
        }
        term = term * v * ratio;
        sum = sum + term;
        if term.norm() == T::zero() {
            return Ok(sum);
        }
    }
    Err(Error::SeriesTruncation { terms: ctl.max_terms, tail_bound: to_f64(tail) })
}

/// `Σ_k k!/(c)_k v^k`, the hypergeometric function `2F1(1,1;c;v)`.
pub fn hyp2f1_11<T: Real>(c: T, v: Complex<T>, ctl: &SeriesControl) -> Result<Complex<T>> {
    if c <= T::zero() && c.fract() == T::zero() {
        return Err(Error::InvalidParameter(format!("c = {c} is a nonpositive integer")));
    }
    ratio_series(T::one(), c, v, ctl)
}

const PANEL_DEGREE: usize = 12;

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let degree = NonZeroUsize::new(PANEL_DEGREE).expect("nonzero degree");
        GaussLegendre::new(degree).as_node_weight_pairs().to_vec()
    })
}

/// `2F1(1,1;c;v) = (c-1) ∫_0^1 y^{c-2} / (1-v+vy) dy` for `c > 2`, Gauss-Legendre
/// on the panels `[2^{-k-1}, 2^{-k}]`. The pole sits at `y = 1 - 1/v`, off
/// `[0, 1]` and at distance `~|1-v|` from `0`, so the dyadic grading
/// resolves it; the leftover `[0, h]` is `h^{c-1} / ((c-1)(1-v))` to
/// relative order `h / |1-v|`.
fn hyp2f1_11_quadrature<T: Real>(c: T, v: Complex<T>) -> Complex<T> {
    let e = c - lit(2.0);
    let w = Complex::new(T::one(), T::zero()) - v;
    let half: T = lit(0.5);
    // panel [h/2, h] has nodes h u_j with u_j in (1/2, 1)
    let nodes: Vec<(T, T, T)> = panel_rule()
        .iter()
        .map(|&(x, wt)| {
            let u = lit::<T>(0.75 + 0.25 * x);
            (u, u.powf(e), lit::<T>(0.25 * wt))
        })
        .collect();
    let eps: T = lit(1e-17);
    let shrink = half.powf(e + T::one());
    let mut sum = Complex::new(T::zero(), T::zero());
    let (mut h, mut scale) = (T::one(), T::one());
    loop {
        let panel = nodes.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(u, ue, wt)| acc + (w + v * (h * u)).inv() * (ue * wt));
        sum = sum + panel * scale;
        h = h * half;
        // scale = h^{e+1}
        scale = scale * shrink;
        let rest = scale / ((e + T::one()) * w.norm());
        if h <= eps * w.norm() || rest <= eps * sum.norm() {
            break;
        }
    }
    (sum + w.inv() * (scale / (e + T::one()))) * (c - T::one())
}

/// `2F1(1,1;c;v)` for integer `c >= 2` from
/// `G_m = (1/m - (1-v) G_{m-1}) / v`, `G_0 = -log(1-v)/v`, value `(c-1) G_{c-2}`.
/// Stable for `|v| >= 1/2`.
fn hyp2f1_11_integer<T: Real>(c: usize, v: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let w = one - v;
    let mut g = -w.ln() / v;
    for m in 1..=(c - 2) {
        g = (one * lit::<T>(1.0 / m as f64) - w * g) / v;
    }
    g * lit::<T>((c - 1) as f64)
}

/// Power series of `K_q` in `v = <z,w>`: `Σ c_k(q) v^k`.
pub fn kernel_series<T: Real>(params: &KernelParams<T>, v: Complex<T>, ctl: &SeriesControl) -> Result<Complex<T>> {
    let n: T = lit(params.dim as f64);
    if params.is_power_branch() {
        ratio_series(n + T::one() + params.q, T::one(), v, ctl)
    } else {
        hyp2f1_11(T::one() - n - params.q, v, ctl)
    }
}

/// `K_q` as a function of `v = <z,w>`.
pub fn kernel_of_inner<T: Real>(params: &KernelParams<T>, v: Complex<T>, ctl: &SeriesControl) -> Result<Complex<T>> {
    let n: T = lit(params.dim as f64);
    if params.is_power_branch() {
        let one = Complex::new(T::one(), T::zero());
        // Re(1 - v) > 0, so the principal logarithm is continuous here.
        return Ok((-(one - v).ln() * (n + T::one() + params.q)).exp());
    }
    let c = T::one() - n - params.q;
    if v.norm() >= lit(0.5) {
        if c.fract() != T::zero() {
            return Ok(hyp2f1_11_quadrature(c, v));
        }
        if let Some(ci) = c.to_usize() {
            return Ok(hyp2f1_11_integer(ci, v));
        }
    }
    hyp2f1_11(c, v, ctl)
}

/// The kernel `K_q(z, w)`.
pub fn kernel_k<T: Real>(params: &KernelParams<T>, z: &BallPoint<T>, w: &BallPoint<T>, ctl: &SeriesControl) -> Result<Complex<T>> {
    kernel_of_inner(params, z.inner(w), ctl)
}

/// Upper bound on `|K_q|` over the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaxBound<T> {
    Finite(T),
    Unbounded,
}

/// Result of scanning `K_q` over a polar grid of `v` with `|v| <= 1 - 1e-4`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelScan<T> {
    pub min_modulus: T,
    pub max_modulus: MaxBound<T>,
    /// Largest `|K_q|` seen on the grid.
    pub grid_max: T,
    /// `max |K_q|` over `|v| <= 1-1e-4` divided by the same over `|v| <= 1-1e-2`.
    pub edge_growth: T,
    pub rho0_estimate: T,
}

pub const SCAN_CAP: f64 = 1e-4;

/// Scans `K_q` over `v` in the disk, `density` radii by `4 density` angles.
pub fn kernel_bounds_scan<T: Real>(params: &KernelParams<T>, density: usize) -> Result<KernelScan<T>> {
    let ctl = SeriesControl::default();
    let density = density.max(4);
    let radii: Vec<f64> = (0..=density)
        .map(|i| {
            let x = i as f64 / density as f64;
            // dense near the unit circle, up to 1 - SCAN_CAP
            if x < 0.5 {
                1.8 * x
            } else {
                1.0 - 0.1 * (SCAN_CAP / 0.1f64).powf(2.0 * (x - 0.5))
            }
        })
        .collect();
    let n_ang = 4 * density;
    let mut min_mod = T::infinity();
    let mut max_all = T::zero();
    let mut max_inner = T::zero();
    let mut rho0 = T::zero();
    let mut rho0_open = true;
    for &r in &radii {
        let mut min_re = T::infinity();
        for j in 0..n_ang {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n_ang as f64;
            let v = Complex::from_polar(lit::<T>(r), lit::<T>(th));
            let k = kernel_of_inner(params, v, &ctl)?;
            let m = k.norm();
            min_mod = min_mod.min(m);
            max_all = max_all.max(m);
            if r <= 1.0 - 1e-2 {
                max_inner = max_inner.max(m);
            }
            min_re = min_re.min(k.re);
        }
        if rho0_open && min_re >= lit(0.5) {
            rho0 = lit(r);
        } else {
            rho0_open = false;
        }
    }
    let max_modulus = if params.is_power_branch() || params.q == -lit::<T>(params.dim as f64 + 1.0) { MaxBound::Unbounded } else { MaxBound::Finite(max_all) };
    Ok(KernelScan { min_modulus: min_mod, max_modulus, grid_max: max_all, edge_growth: max_all / max_inner, rho0_estimate: rho0 })
}

/// Polynomial `Σ c_α z^α` in `dim` complex variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Real> {
    pub dim: usize,
    pub terms: Vec<(Vec<u32>, Complex<T>)>,
}

/// A homogeneous polynomial is a polynomial whose terms share one degree.
pub type HomogeneousPolynomial<T> = Polynomial<T>;

impl<T: Real> Polynomial<T> {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, Complex<T>)>) -> Result<Self> {
        if terms.iter().any(|(a, _)| a.len() != dim) {
            return Err(Error::InvalidParameter("multi-index length differs from dimension".into()));
        }
        Ok(Self { dim, terms })
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self { dim, terms: vec![(vec![0; dim], Complex::new(c, T::zero()))] }
    }

    /// `z^alpha`.
    pub fn monomial(alpha: Vec<u32>) -> Self {
        Self { dim: alpha.len(), terms: vec![(alpha, Complex::new(T::one(), T::zero()))] }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| a.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.iter().all(|(a, _)| a.iter().sum::<u32>() as usize == d)
    }

    fn term_value(alpha: &[u32], c: Complex<T>, z: &BallPoint<T>) -> Complex<T> {
        alpha.iter().zip(z.coords()).fold(c, |acc, (&e, zi)| acc * zi.powu(e))
    }

    pub fn eval(&self, z: &BallPoint<T>) -> Complex<T> {
        self.terms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (a, c)| acc + Self::term_value(a, *c, z))
    }

    /// `Σ_k m(k) f_k(z)` where `f_k` is the degree-`k` part.
    pub fn eval_graded(&self, z: &BallPoint<T>, mut m: impl FnMut(usize) -> Result<T>) -> Result<Complex<T>> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, c) in &self.terms {
            let k = a.iter().sum::<u32>() as usize;
            acc = acc + Self::term_value(a, *c, z) * m(k)?;
        }
        Ok(acc)
    }
}

/// `D_s^t f(z) = Σ d_k(s,t) f_k(z)`.
pub fn apply_d_st<T: Real>(f: &Polynomial<T>, s: T, t: T, z: &BallPoint<T>) -> Result<Complex<T>> {
    let params = KernelParams::new(f.dim, s)?;
    f.eval_graded(z, |k| diff_coeff(s, t, &params, k))
}

/// `I_s^t f(z) = (1-|z|^2)^t D_s^t f(z)`.
pub fn apply_i_st<T: Real>(f: &Polynomial<T>, s: T, t: T, z: &BallPoint<T>) -> Result<Complex<T>> {
    Ok(apply_d_st(f, s, t, z)? * z.defect().powf(t))
}
