//! Quadrature against `mu_q`, weighted norms and distribution functions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_power_with_offset};
use crate::geometry::BallPoint;
use crate::sampling::Samples;
use crate::scalar::{lit, to_f64, Real};
use crate::weights::Weight;

/// Monte Carlo value with its standard error and provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate<T: Real, V = T> {
    pub value: V,
    pub stderr: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> MCEstimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, stderr: T::zero(), n_samples: 0, seed: 0 }
    }

    pub fn relative_error(&self) -> T {
        if self.value == T::zero() {
            T::zero()
        } else {
            self.stderr / self.value.abs()
        }
    }

    pub fn scale(self, c: T) -> Self {
        Self { value: self.value * c, stderr: self.stderr * c.abs(), ..self }
    }

    /// `value^e` with first-order error propagation.
    pub fn powf(self, e: T) -> Self {
        let value = self.value.powf(e);
        let stderr = if self.value == T::zero() { T::zero() } else { (e * value / self.value).abs() * self.stderr };
        Self { value, stderr, ..self }
    }
}

impl<T: Real> MCEstimate<T, Complex<T>> {
    pub fn norm(&self) -> MCEstimate<T> {
        MCEstimate { value: self.value.norm(), stderr: self.stderr, n_samples: self.n_samples, seed: self.seed }
    }

    pub fn scale(self, c: T) -> Self {
        Self { value: self.value * c, stderr: self.stderr * c.abs(), ..self }
    }
}

impl<T: Real, V: fmt::Display> fmt::Display for MCEstimate<T, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {} (n={}, seed={})", self.value, self.stderr, self.n_samples, self.seed)
    }
}

/// Complex integrand with an optional boundary-decay tag: `e` such that
/// `|g(z)| ≲ (1-|z|^2)^e` near the sphere.
#[derive(Clone)]
pub struct Integrand<T: Real> {
    f: Arc<dyn Fn(&BallPoint<T>) -> Complex<T> + Send + Sync>,
    pub decay: Option<T>,
}

impl<T: Real> Integrand<T> {
    pub fn new(f: impl Fn(&BallPoint<T>) -> Complex<T> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), decay: None }
    }

    pub fn real(f: impl Fn(&BallPoint<T>) -> T + Send + Sync + 'static) -> Self {
        Self::new(move |z| Complex::new(f(z), T::zero()))
    }

    pub fn constant(c: T) -> Self {
        Self::real(move |_| c)
    }

    pub fn with_decay(mut self, e: T) -> Self {
        self.decay = Some(e);
        self
    }

    pub fn eval(&self, z: &BallPoint<T>) -> Complex<T> {
        (self.f)(z)
    }
}

/// Sampling exponent for `∫ g dmu_q`, rejecting divergent configurations.
fn proposal_exponent<T: Real>(q: T, decay: Option<T>) -> Result<f64> {
    let eff = q + decay.unwrap_or(T::zero());
    if !(eff > -T::one()) {
        return Err(Error::Divergent(format!("∫ g dmu_q with q = {q} and boundary decay {:?}", decay.map(to_f64))));
    }
    Ok(to_f64(eff))
}

/// `∫ g dmu_q` with radial importance sampling matched to the boundary behaviour.
pub fn integrate_mu_q<T: Real>(g: &Integrand<T>, q: T, dim: usize, n: usize, seed: u64) -> Result<MCEstimate<T, Complex<T>>> {
    let kappa = proposal_exponent(q, g.decay)?;
    let s = Samples::<T>::whole(dim, kappa, n, seed)?;
    Ok(s.integrate_complex(|z| g.eval(z) * z.defect().powf(q)))
}

/// `(∫ |f|^p w dmu_q)^{1/p}`.
pub fn lp_norm<T: Real>(f: &Integrand<T>, p: T, w: &Weight<T>, q: T, dim: usize, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    if !(p >= T::one()) {
        return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    let decay = match (f.decay, w.boundary_exponent()) {
        (Some(a), Some(b)) => Some(a * p + b),
        (None, Some(b)) => Some(b),
        (Some(a), None) => Some(a * p),
        (None, None) => None,
    };
    let kappa = proposal_exponent(q, decay)?;
    let s = Samples::<T>::whole(dim, kappa, n, seed)?;
    Ok(lp_norm_on(&s, |z| f.eval(z).norm(), p, w, q))
}

/// `(∫ |f|^p w dmu_q)^{1/p}` on a given sample.
pub fn lp_norm_on<T: Real>(s: &Samples<T>, f: impl Fn(&BallPoint<T>) -> T + Sync, p: T, w: &Weight<T>, q: T) -> MCEstimate<T> {
    s.integrate_q(q, |z| f(z).abs().powf(p) * w.eval(z)).powf(T::one() / p)
}

/// `mu_q({z : |f(z)| > lambda})`.
pub fn distribution_estimate<T: Real>(f: &Integrand<T>, lambda: T, q: T, dim: usize, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    if !(q > -T::one()) {
        return Err(Error::Divergent(format!("mu_q with q = {q} is infinite")));
    }
    let s = Samples::<T>::whole(dim, to_f64(q), n, seed)?;
    Ok(s.integrate_q(q, |z| if f.eval(z).norm() > lambda { T::one() } else { T::zero() }))
}

/// `I(z) = ∫ (1-|w|^2)^d / |1-<z,w>|^{1+N+c} dmu(w)`.
pub fn forelli_rudin_integral<T: Real>(c: T, d: T, z: &BallPoint<T>, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    if !(d > -T::one()) {
        return Err(Error::InvalidParameter(format!("Forelli-Rudin integral needs d > -1, got {d}")));
    }
    let e = T::one() + lit::<T>(z.dim() as f64) + c;
    let s = Samples::focused(z, to_f64(d), n, seed)?;
    let one = Complex::new(T::one(), T::zero());
    Ok(s.integrate(|w| w.defect().powf(d) / (one - z.inner(w)).norm().powf(e)))
}

/// Growth of the Forelli-Rudin integral towards the sphere.
#[derive(Clone, Debug)]
pub struct ForelliRudinFit<T: Real> {
    /// Leading power `max(e, 0)` of the fit `I ≈ A (1-|z|^2)^{-e} + B`.
    pub fitted_exponent: f64,
    /// Set when `c = d`: growth is logarithmic.
    pub log_flag: bool,
    /// Plain least-squares slope of `log I` against `-log(1-|z|^2)`.
    pub loglog_slope: f64,
    /// Coefficient of `|z|^{-2} log(1/(1-|z|^2))` in the logarithmic model (log case only).
    pub log_coefficient: Option<f64>,
    pub radii: Vec<T>,
    pub values: Vec<MCEstimate<T>>,
}

pub const DEFAULT_FR_RADII: [f64; 4] = [0.9, 0.95, 0.975, 0.9875];

/// Fits the growth exponent of the Forelli-Rudin integral along `r e_1`.
pub fn forelli_rudin_exponent<T: Real>(c: T, d: T, dim: usize, radii: &[T], n: usize, seed: u64) -> Result<ForelliRudinFit<T>> {
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("need at least three strictly increasing radii".into()));
    }
    let mut values = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let z = BallPoint::on_axis(dim, r)?;
        let est = forelli_rudin_integral(c, d, &z, n, seed.wrapping_add(i as u64))?;
        if est.relative_error() > lit(0.2) {
            return Err(Error::FitRefused(format!("relative stderr {} at |z| = {r} exceeds 0.2", est.relative_error())));
        }
        values.push(est);
    }
    let x: Vec<f64> = radii.iter().map(|&r| to_f64((T::one() - r) * (T::one() + r))).collect();
    let y: Vec<f64> = values.iter().map(|v| to_f64(v.value)).collect();
    let loglog = fit_line(&x.iter().map(|v| -v.ln()).collect::<Vec<_>>(), &y.iter().map(|v| v.ln()).collect::<Vec<_>>())
        .ok_or_else(|| Error::FitRefused("degenerate radii".into()))?;
    let power = fit_power_with_offset(&x, &y, -3.0, 3.0 + to_f64(c - d).max(0.0), 6000).ok_or_else(|| Error::FitRefused("power fit failed".into()))?;
    let log_flag = c == d;
    let log_coefficient = if log_flag {
        let feat: Vec<f64> = radii.iter().zip(&x).map(|(&r, &xi)| (1.0 / xi).ln() / to_f64(r * r)).collect();
        fit_line(&feat, &y).map(|l| l.slope)
    } else {
        None
    };
    Ok(ForelliRudinFit { fitted_exponent: power.exponent.max(0.0), log_flag, loglog_slope: loglog.slope, log_coefficient, radii: radii.to_vec(), values })
}
