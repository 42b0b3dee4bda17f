//! Importance sampling on the unit ball.
//!
//! Densities are taken with respect to the normalized volume measure `mu`,
//! written as `N u^{N-1} du dsigma` with `u = |z|^2`. Sampled points carry
//! `v = 1 - u` exactly so boundary powers stay accurate.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{BallPoint, Coords, PseudoBall};
use crate::integration::MCEstimate;
use crate::scalar::{lit, to_f64, Real};

/// Samples per RNG stream. Fixed so results do not depend on thread count.
pub const CHUNK: usize = 1024;

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex<f64> {
    Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Uniform point on the unit sphere of C^dim.
pub fn sphere_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex<f64>> {
    loop {
        let g: Vec<Complex<f64>> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// A sampled point in double precision before conversion to the working scalar.
#[derive(Clone, Debug)]
pub struct RawPoint {
    pub coords: SmallVec<[Complex<f64>; 3]>,
    pub modulus: f64,
    pub defect: f64,
}

impl RawPoint {
    pub fn from_direction(dir: &[Complex<f64>], modulus: f64, defect: f64) -> Self {
        Self { coords: dir.iter().map(|c| c * modulus).collect(), modulus, defect }
    }

    pub fn from_point<T: Real>(z: &BallPoint<T>) -> Self {
        Self { coords: z.coords().iter().map(|c| Complex::new(to_f64(c.re), to_f64(c.im))).collect(), modulus: to_f64(z.modulus()), defect: to_f64(z.defect()) }
    }

    pub fn to_point<T: Real>(&self) -> BallPoint<T> {
        let coords: Coords<T> = self.coords.iter().map(|c| Complex::new(lit(c.re), lit(c.im))).collect();
        BallPoint::from_parts(coords, lit(self.modulus), lit(self.defect))
    }

    /// `<zeta, e>` for the unit direction `zeta` of this point.
    fn direction_inner(&self, e: &[Complex<f64>]) -> Option<Complex<f64>> {
        if self.modulus == 0.0 {
            return None;
        }
        let ip = self.coords.iter().zip(e).fold(Complex::new(0.0, 0.0), |a, (z, w)| a + z * w.conj());
        Some(ip / self.modulus)
    }
}

/// Radial law on `v = 1 - |z|^2 ∈ [v_lo, v_hi]` with density proportional to `v^kappa`.
#[derive(Clone, Copy, Debug)]
struct Radial {
    v_lo: f64,
    v_hi: f64,
    kappa: f64,
    norm: f64,
}

impl Radial {
    fn new(v_lo: f64, v_hi: f64, kappa: f64) -> Result<Self> {
        if !(v_lo >= 0.0 && v_hi > v_lo && v_hi <= 1.0 + 1e-15) {
            return Err(Error::InvalidParameter(format!("radial range [{v_lo}, {v_hi}]")));
        }
        if v_lo == 0.0 && kappa <= -1.0 {
            return Err(Error::Divergent(format!("radial density v^{kappa} reaching the sphere")));
        }
        let norm = if (kappa + 1.0).abs() < 1e-12 {
            (v_hi / v_lo).ln()
        } else {
            let e = kappa + 1.0;
            (v_hi.powf(e) - v_lo.powf(e)) / e
        };
        Ok(Self { v_lo, v_hi, kappa, norm })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let x: f64 = rng.random();
        let v = if (self.kappa + 1.0).abs() < 1e-12 {
            self.v_lo * (x * (self.v_hi / self.v_lo).ln()).exp()
        } else {
            let e = self.kappa + 1.0;
            let lo = self.v_lo.powf(e);
            (lo + x * (self.v_hi.powf(e) - lo)).powf(1.0 / e)
        };
        v.clamp(self.v_lo, self.v_hi).max(f64::MIN_POSITIVE)
    }

    /// Density in `u` (equivalently in `v`).
    fn density(&self, v: f64) -> f64 {
        if v < self.v_lo || v > self.v_hi {
            return 0.0;
        }
        v.powf(self.kappa) / self.norm
    }
}

/// Product region in spherical coordinates: a radial shell and an angular cap
/// `{|1 - <zeta, zeta0>| < R}` (the whole sphere when no cap is given).
#[derive(Clone, Debug)]
pub struct Region {
    dim: usize,
    radial: std::result::Result<Radial, Error>,
    cap: Option<Cap>,
}

#[derive(Clone, Debug)]
struct Cap {
    radius: f64,
    /// Unitary frame whose first column is the cap center.
    frame: Vec<Vec<Complex<f64>>>,
}

impl Cap {
    fn new(center: Vec<Complex<f64>>, radius: f64) -> Self {
        let dim = center.len();
        let mut frame: Vec<Vec<Complex<f64>>> = vec![center];
        for k in 0..dim {
            if frame.len() == dim {
                break;
            }
            let mut e = vec![Complex::new(0.0, 0.0); dim];
            e[k] = Complex::new(1.0, 0.0);
            for f in &frame {
                let ip = e.iter().zip(f).fold(Complex::new(0.0, 0.0), |a, (x, y)| a + x * y.conj());
                for (x, y) in e.iter_mut().zip(f) {
                    *x -= ip * y;
                }
            }
            let n = e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-8 {
                frame.push(e.into_iter().map(|c| c / n).collect());
            }
        }
        Self { radius, frame }
    }

    fn center(&self) -> &[Complex<f64>] {
        &self.frame[0]
    }

    /// Half-width of the arc for `N = 1`.
    fn half_angle(&self) -> f64 {
        2.0 * (self.radius.min(2.0) / 2.0).asin()
    }
}

impl Region {
    pub fn new(dim: usize, center: Option<Vec<Complex<f64>>>, angular_radius: Option<f64>, v_lo: f64, v_hi: f64, kappa: f64) -> Self {
        let cap = match (center, angular_radius) {
            (Some(c), Some(r)) if r < 2.0 => Some(Cap::new(c, r)),
            _ => None,
        };
        Self { dim, radial: Radial::new(v_lo, v_hi.min(1.0), kappa), cap }
    }

    pub fn whole_sphere(dim: usize, v_lo: f64, v_hi: f64, kappa: f64) -> Self {
        Self::new(dim, None, None, v_lo, v_hi, kappa)
    }

    pub fn check(&self) -> Result<()> {
        self.radial.as_ref().map(|_| ()).map_err(Clone::clone)
    }

    pub fn v_lo(&self) -> f64 {
        self.radial.as_ref().map(|r| r.v_lo).unwrap_or(0.0)
    }

    /// First coordinate of the point's direction in the cap frame.
    pub fn first_coordinate(&self, p: &RawPoint) -> Option<Complex<f64>> {
        self.cap.as_ref().and_then(|c| p.direction_inner(c.center()))
    }

    /// One draw; `None` when the draw falls outside the ball (zero weight).
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Option<RawPoint> {
        let radial = self.radial.as_ref().ok()?;
        let v = radial.draw(rng);
        let u = 1.0 - v;
        let modulus = u.max(0.0).sqrt();
        let dir = match &self.cap {
            None => sphere_point(self.dim, rng),
            Some(cap) if self.dim == 1 => {
                let phi = (2.0 * rng.random::<f64>() - 1.0) * cap.half_angle();
                vec![cap.center()[0] * Complex::from_polar(1.0, phi)]
            }
            Some(cap) => {
                let rho = cap.radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let x = Complex::new(1.0, 0.0) + Complex::from_polar(rho, theta);
                let rest = 1.0 - x.norm_sqr();
                if rest <= 0.0 {
                    return None;
                }
                let tail = sphere_point(self.dim - 1, rng);
                let scale = rest.sqrt();
                let mut dir = vec![Complex::new(0.0, 0.0); self.dim];
                for (k, col) in cap.frame.iter().enumerate() {
                    let coef = if k == 0 { x } else { tail[k - 1] * scale };
                    for (d, c) in dir.iter_mut().zip(col) {
                        *d += coef * c;
                    }
                }
                dir
            }
        };
        Some(RawPoint::from_direction(&dir, modulus, v))
    }

    /// Density of the region law with respect to `mu` at `p`.
    pub fn density(&self, p: &RawPoint) -> f64 {
        let Ok(radial) = &self.radial else { return 0.0 };
        let u = p.modulus * p.modulus;
        if u <= 0.0 {
            return 0.0;
        }
        let pr = radial.density(p.defect);
        if pr == 0.0 {
            return 0.0;
        }
        let n = self.dim as i32;
        let ang = match &self.cap {
            None => 1.0,
            Some(cap) => {
                let x = match p.direction_inner(cap.center()) {
                    Some(x) => x,
                    None => return 0.0,
                };
                if self.dim == 1 {
                    let phi = x.arg().abs();
                    if phi < cap.half_angle() {
                        std::f64::consts::PI / cap.half_angle()
                    } else {
                        0.0
                    }
                } else {
                    if (Complex::new(1.0, 0.0) - x).norm() >= cap.radius {
                        return 0.0;
                    }
                    let rest = (1.0 - x.norm_sqr()).max(1e-300);
                    1.0 / (cap.radius * cap.radius * (n - 1) as f64 * rest.powi(n - 2))
                }
            }
        };
        pr * ang / (self.dim as f64 * u.powi(n - 1))
    }
}

/// Proposal law on the ball.
#[derive(Clone, Debug)]
pub enum Proposal {
    /// `v ~ Beta(kappa+1, N)`, uniform direction: density `v^kappa (kappa+1)_N / N!`.
    WholeBall {
        dim: usize,
        kappa: f64,
    },
    Region(Region),
}

impl Proposal {
    pub fn whole_ball(dim: usize, kappa: f64) -> Result<Self> {
        if kappa <= -1.0 {
            return Err(Error::Divergent(format!("whole-ball proposal with exponent {kappa}")));
        }
        Ok(Self::WholeBall { dim, kappa })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Option<RawPoint> {
        match self {
            Self::WholeBall { dim, kappa } => {
                let beta = Beta::new(kappa + 1.0, *dim as f64).ok()?;
                let v: f64 = beta.sample(rng).max(f64::MIN_POSITIVE);
                let dir = sphere_point(*dim, rng);
                let modulus = (1.0 - v).max(0.0).sqrt();
                Some(RawPoint::from_direction(&dir, modulus, v))
            }
            Self::Region(r) => r.draw(rng),
        }
    }

    fn density(&self, p: &RawPoint) -> f64 {
        match self {
            Self::WholeBall { dim, kappa } => {
                let mut c = 1.0;
                for j in 0..*dim {
                    c *= (kappa + 1.0 + j as f64) / (j as f64 + 1.0);
                }
                p.defect.powf(*kappa) * c
            }
            Self::Region(r) => r.density(p),
        }
    }
}

/// Mixture of proposals with deterministic per-component sample counts,
/// combined with balance-heuristic weights.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub dim: usize,
    components: Vec<(Proposal, f64)>,
}

impl Mixture {
    pub fn new(dim: usize) -> Self {
        Self { dim, components: Vec::new() }
    }

    pub fn single(dim: usize, p: Proposal) -> Self {
        Self { dim, components: vec![(p, 1.0)] }
    }

    pub fn with(mut self, p: Proposal, share: f64) -> Self {
        self.components.push((p, share));
        self
    }

    /// Whole-ball proposal plus caps around `focus` at dyadic multiples of
    /// its distance to the sphere, for integrands peaking near `focus`.
    pub fn focused(dim: usize, focus: &RawPoint, kappa: f64, whole_share: f64) -> Result<Self> {
        let mut m = Self::single(dim, Proposal::whole_ball(dim, kappa)?);
        m.components[0].1 = whole_share;
        let r = focus.modulus;
        let gap = (1.0 - r).max(1e-12);
        let mut caps = Vec::new();
        let mut big_r = gap;
        while big_r < 2.0 {
            let outer = r + big_r;
            let v_lo = if outer >= 1.0 { 0.0 } else { (1.0 - outer) * (1.0 + outer) };
            let inner = (r - big_r).max(0.0);
            let v_hi = (1.0 - inner) * (1.0 + inner);
            let dir = if r > 0.0 { Some(focus.coords.iter().map(|c| c / r).collect()) } else { None };
            caps.push(Region::new(dim, dir, Some(big_r), v_lo, v_hi, kappa));
            big_r *= 2.0;
        }
        let share = (1.0 - whole_share) / caps.len().max(1) as f64;
        for c in caps {
            c.check()?;
            m.components.push((Proposal::Region(c), share));
        }
        Ok(m)
    }

    fn counts(&self, n: usize) -> Vec<usize> {
        let total: f64 = self.components.iter().map(|c| c.1).sum();
        let mut counts: Vec<usize> = self.components.iter().map(|c| ((c.1 / total) * n as f64).floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        if let Some(first) = counts.first_mut() {
            *first += n - assigned;
        }
        counts
    }

    /// Draws `n` points (some possibly rejected) and their weights `dmu/dP`.
    pub fn sample<T: Real>(&self, n: usize, seed: u64) -> Samples<T> {
        let counts = self.counts(n);
        let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
        let jobs: Vec<(usize, usize, usize)> =
            counts.iter().enumerate().flat_map(|(j, &c)| (0..c.div_ceil(CHUNK)).map(move |k| (j, k, CHUNK.min(c - k * CHUNK)))).collect();
        let parts: Vec<Vec<(BallPoint<T>, T)>> = jobs
            .par_iter()
            .map(|&(j, k, len)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((j as u64) << 40) | k as u64);
                let prop = &self.components[j].0;
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    let Some(p) = prop.draw(&mut rng) else { continue };
                    let dens: f64 = self.components.iter().zip(&fractions).map(|((c, _), f)| if *f > 0.0 { f * c.density(&p) } else { 0.0 }).sum();
                    if dens > 0.0 && dens.is_finite() {
                        out.push((p.to_point(), lit(1.0 / dens)));
                    }
                }
                out
            })
            .collect();
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for part in parts {
            for (p, w) in part {
                points.push(p);
                weights.push(w);
            }
        }
        Samples { dim: self.dim, points, weights, n, seed }
    }
}

/// Materialized weighted sample of `mu`: `∫ g dmu ≈ (1/n) Σ w_i g(z_i)`.
///
/// Points dropped by rejection still count in `n`, so estimates stay unbiased.
#[derive(Clone, Debug)]
pub struct Samples<T: Real> {
    pub dim: usize,
    pub points: Vec<BallPoint<T>>,
    pub weights: Vec<T>,
    pub n: usize,
    pub seed: u64,
}

impl<T: Real> Samples<T> {
    pub fn from_mixture(m: &Mixture, n: usize, seed: u64) -> Self {
        m.sample(n, seed)
    }

    /// Whole ball, proposal exponent `kappa > -1`.
    pub fn whole(dim: usize, kappa: f64, n: usize, seed: u64) -> Result<Self> {
        Ok(Mixture::single(dim, Proposal::whole_ball(dim, kappa)?).sample(n, seed))
    }

    /// Points of the bounding region of `b` that fall in `b`.
    pub fn ball(b: &PseudoBall<T>, kappa: f64, n: usize, seed: u64) -> Result<Self> {
        let region = b.bounding_region(kappa);
        region.check()?;
        let mut s = Mixture::single(b.dim(), Proposal::Region(region)).sample::<T>(n, seed);
        s.retain(|z| b.contains(z));
        Ok(s)
    }

    /// Points of `b` with `1-|z|^2 >= v_min > 0`; any proposal exponent is admissible.
    pub fn ball_truncated(b: &PseudoBall<T>, v_min: f64, kappa: f64, n: usize, seed: u64) -> Result<Self> {
        let region = b.bounding_region_above(kappa, v_min);
        region.check()?;
        let mut s = Mixture::single(b.dim(), Proposal::Region(region)).sample::<T>(n, seed);
        s.retain(|z| b.contains(z) && to_f64(z.defect()) >= v_min);
        Ok(s)
    }

    /// Points near `focus`; whole-ball proposal mixed with caps around it.
    pub fn focused(focus: &BallPoint<T>, kappa: f64, n: usize, seed: u64) -> Result<Self> {
        let m = Mixture::focused(focus.dim(), &RawPoint::from_point(focus), kappa, 0.3)?;
        Ok(m.sample(n, seed))
    }

    pub fn retain(&mut self, keep: impl Fn(&BallPoint<T>) -> bool + Sync) {
        let flags: Vec<bool> = self.points.par_iter().map(&keep).collect();
        let mut i = 0;
        self.points.retain(|_| {
            i += 1;
            flags[i - 1]
        });
        let mut i = 0;
        self.weights.retain(|_| {
            i += 1;
            flags[i - 1]
        });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted means and covariance of the mean for `k` functions evaluated together.
    pub fn moments(&self, k: usize, f: impl Fn(&BallPoint<T>, &mut [T]) + Sync) -> Moments<T> {
        let partials: Vec<(Vec<T>, Vec<T>)> = self
            .points
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(pts, ws)| {
                let mut s = vec![T::zero(); k];
                let mut ss = vec![T::zero(); k * k];
                let mut buf = vec![T::zero(); k];
                for (p, &w) in pts.iter().zip(ws) {
                    buf.iter_mut().for_each(|b| *b = T::zero());
                    f(p, &mut buf);
                    for i in 0..k {
                        let xi = w * buf[i];
                        s[i] = s[i] + xi;
                        for j in 0..=i {
                            ss[i * k + j] = ss[i * k + j] + xi * w * buf[j];
                        }
                    }
                }
                (s, ss)
            })
            .collect();
        let mut s = vec![T::zero(); k];
        let mut ss = vec![T::zero(); k * k];
        for (ps, pss) in partials {
            for i in 0..k {
                s[i] = s[i] + ps[i];
            }
            for i in 0..k * k {
                ss[i] = ss[i] + pss[i];
            }
        }
        let n: T = lit(self.n.max(1) as f64);
        let means: Vec<T> = s.iter().map(|&x| x / n).collect();
        let mut cov = vec![T::zero(); k * k];
        for i in 0..k {
            for j in 0..=i {
                let c = (ss[i * k + j] / n - means[i] * means[j]) / (n - T::one()).max(T::one());
                cov[i * k + j] = c;
                cov[j * k + i] = c;
            }
        }
        Moments { means, cov, n: self.n, seed: self.seed }
    }

    /// `∫ f dmu`.
    pub fn integrate(&self, f: impl Fn(&BallPoint<T>) -> T + Sync) -> MCEstimate<T> {
        self.moments(1, |z, out| out[0] = f(z)).estimate(0)
    }

    /// `∫ f dmu_q`.
    pub fn integrate_q(&self, q: T, f: impl Fn(&BallPoint<T>) -> T + Sync) -> MCEstimate<T> {
        self.integrate(|z| z.defect().powf(q) * f(z))
    }

    /// `∫ f dmu` for complex `f`.
    pub fn integrate_complex(&self, f: impl Fn(&BallPoint<T>) -> Complex<T> + Sync) -> MCEstimate<T, Complex<T>> {
        let m = self.moments(2, |z, out| {
            let v = f(z);
            out[0] = v.re;
            out[1] = v.im;
        });
        let stderr = (m.cov[0] + m.cov[3]).max(T::zero()).sqrt();
        MCEstimate { value: Complex::new(m.means[0], m.means[1]), stderr, n_samples: self.n, seed: self.seed }
    }

    /// `∫ f dmu / ∫ g dmu` with delta-method standard error.
    pub fn ratio(&self, f: impl Fn(&BallPoint<T>) -> T + Sync, g: impl Fn(&BallPoint<T>) -> T + Sync) -> MCEstimate<T> {
        let m = self.moments(2, |z, out| {
            out[0] = f(z);
            out[1] = g(z);
        });
        m.log_linear(&[T::one(), -T::one()])
    }
}

/// Means of several integrands on one sample, with the covariance of the means.
#[derive(Clone, Debug)]
pub struct Moments<T: Real> {
    pub means: Vec<T>,
    /// Row-major `k x k` covariance of the mean estimates.
    pub cov: Vec<T>,
    pub n: usize,
    pub seed: u64,
}

impl<T: Real> Moments<T> {
    pub fn estimate(&self, i: usize) -> MCEstimate<T> {
        let k = self.means.len();
        MCEstimate { value: self.means[i], stderr: self.cov[i * k + i].max(T::zero()).sqrt(), n_samples: self.n, seed: self.seed }
    }

    /// `Π means_i^{e_i}` with delta-method standard error.
    pub fn log_linear(&self, exponents: &[T]) -> MCEstimate<T> {
        let k = self.means.len();
        let mut value = T::one();
        for (m, e) in self.means.iter().zip(exponents) {
            if *e != T::zero() {
                value = value * m.powf(*e);
            }
        }
        let grad: Vec<T> = self.means.iter().zip(exponents).map(|(m, e)| if *e == T::zero() { T::zero() } else { *e / *m }).collect();
        let mut var = T::zero();
        for i in 0..k {
            for j in 0..k {
                var = var + grad[i] * grad[j] * self.cov[i * k + j];
            }
        }
        let stderr = value.abs() * var.max(T::zero()).sqrt();
        MCEstimate { value, stderr: if stderr.is_finite() { stderr } else { T::infinity() }, n_samples: self.n, seed: self.seed }
    }
}
