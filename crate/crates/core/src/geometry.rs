//! Points of the unit ball, the pseudo-distance and its balls.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::integration::MCEstimate;
use crate::sampling::{self, Region};
use crate::scalar::{lit, to_f64, Real};

pub type Coords<T> = SmallVec<[Complex<T>; 3]>;

/// A point of the open unit ball of C^N.
///
/// Besides the modulus the point caches its defect `1 - |z|^2`, which sampled
/// points carry at full relative precision even very close to the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint<T: Real> {
    coords: Coords<T>,
    modulus: T,
    defect: T,
}

impl<T: Real> BallPoint<T> {
    pub fn new(coords: impl Into<Coords<T>>) -> Result<Self> {
        let coords: Coords<T> = coords.into();
        if coords.is_empty() {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        let sq: T = coords.iter().map(|c| c.norm_sqr()).sum();
        let modulus = sq.sqrt();
        if !(modulus < T::one()) {
            return Err(Error::OutsideBall { modulus: to_f64(modulus) });
        }
        let defect = (T::one() - modulus) * (T::one() + modulus);
        Ok(Self { coords, modulus, defect })
    }

    /// Point with real coordinates.
    pub fn real(xs: &[T]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex::new(x, T::zero())).collect::<Coords<T>>())
    }

    pub fn origin(dim: usize) -> Self {
        Self { coords: (0..dim).map(|_| Complex::new(T::zero(), T::zero())).collect(), modulus: T::zero(), defect: T::one() }
    }

    /// `r * e_1`.
    pub fn on_axis(dim: usize, r: T) -> Result<Self> {
        let mut xs = vec![T::zero(); dim];
        xs[0] = r;
        Self::real(&xs)
    }

    /// Trusted constructor for sampled points whose modulus and defect are known.
    pub(crate) fn from_parts(coords: Coords<T>, modulus: T, defect: T) -> Self {
        Self { coords, modulus, defect }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex<T>] {
        &self.coords
    }

    pub fn modulus(&self) -> T {
        self.modulus
    }

    /// `1 - |z|^2`.
    pub fn defect(&self) -> T {
        self.defect
    }

    /// `<z, w> = sum z_i conj(w_i)`.
    pub fn inner(&self, w: &Self) -> Complex<T> {
        self.coords.iter().zip(w.coords.iter()).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj())
    }

    /// Unit vector `z/|z|`, or `None` at the origin.
    pub fn direction(&self) -> Option<Coords<T>> {
        if self.modulus == T::zero() {
            return None;
        }
        Some(self.coords.iter().map(|c| c / self.modulus).collect())
    }

    /// Same direction, new modulus.
    pub fn with_modulus(&self, r: T) -> Result<Self> {
        match self.direction() {
            Some(dir) => Self::new(dir.iter().map(|c| c * r).collect::<Coords<T>>()),
            None => Self::on_axis(self.dim(), r),
        }
    }

    pub fn euclidean_distance(&self, w: &Self) -> T {
        self.coords.iter().zip(w.coords.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<T>().sqrt()
    }

    pub fn cast<U: Real>(&self) -> BallPoint<U> {
        let c = |x: T| lit::<U>(to_f64(x));
        BallPoint { coords: self.coords.iter().map(|z| Complex::new(c(z.re), c(z.im))).collect(), modulus: c(self.modulus), defect: c(self.defect) }
    }
}

/// `||z|-|w|| + |1 - <z,w>/(|z||w|)|`, with the angular term set to 0 when
/// either point is the origin.
pub fn pseudo_distance<T: Real>(z: &BallPoint<T>, w: &BallPoint<T>) -> T {
    let radial = (z.modulus - w.modulus).abs();
    let mm = z.modulus * w.modulus;
    if mm == T::zero() {
        return radial;
    }
    let ip = z.inner(w) / mm;
    radial + (Complex::new(T::one(), T::zero()) - ip).norm()
}

/// Ball of the pseudo-distance.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoBall<T: Real> {
    pub center: BallPoint<T>,
    pub radius: T,
    pub touches_boundary: bool,
}

impl<T: Real> PseudoBall<T> {
    pub fn new(center: BallPoint<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || radius > lit(4.0) {
            return Err(Error::InvalidParameter(format!("pseudo-ball radius must lie in (0, 4], got {radius}")));
        }
        let touches_boundary = radius > T::one() - center.modulus;
        Ok(Self { center, radius, touches_boundary })
    }

    /// `B_k(z) = {w : d(z,w) < k(1-|z|)}`.
    pub fn proportional(z: &BallPoint<T>, k: T) -> Result<Self> {
        Self::new(z.clone(), k * (T::one() - z.modulus))
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, z: &BallPoint<T>) -> bool {
        ball_contains(self, z)
    }

    /// `1 - |c| - R`; positive iff the closure of the ball stays inside the open ball.
    pub fn boundary_gap(&self) -> T {
        T::one() - self.center.modulus - self.radius
    }

    /// Sampling region in spherical coordinates that contains the ball.
    pub fn bounding_region(&self, kappa: f64) -> Region {
        self.bounding_region_above(kappa, 0.0)
    }

    /// Part of the bounding region with `1-|z|^2 >= v_min`.
    pub fn bounding_region_above(&self, kappa: f64, v_min: f64) -> Region {
        let r = to_f64(self.center.modulus);
        let big_r = to_f64(self.radius);
        let outer = r + big_r;
        let v_lo = if outer >= 1.0 { 0.0 } else { (1.0 - outer) * (1.0 + outer) };
        let v_lo = v_lo.max(v_min);
        let inner = (r - big_r).max(0.0);
        let v_hi = (1.0 - inner) * (1.0 + inner);
        let dir = self.center.direction().map(|d| d.iter().map(|c| Complex::new(to_f64(c.re), to_f64(c.im))).collect::<Vec<_>>());
        let ang = if dir.is_some() && big_r < 2.0 { Some(big_r) } else { None };
        Region::new(self.dim(), dir, ang, v_lo, v_hi, kappa)
    }
}

pub fn ball_contains<T: Real>(b: &PseudoBall<T>, z: &BallPoint<T>) -> bool {
    pseudo_distance(&b.center, z) < b.radius
}

/// Point distributed according to normalized Lebesgue measure on `B`.
pub fn sample_ball<T: Real>(b: &PseudoBall<T>, seed: u64) -> Result<BallPoint<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ball_with(b, &mut rng)
}

/// Attempts per requested point before a ball is declared degenerate.
pub const REJECTION_BUDGET: usize = 10_000;

pub fn sample_ball_with<T: Real, R: Rng>(b: &PseudoBall<T>, rng: &mut R) -> Result<BallPoint<T>> {
    let region = b.bounding_region(0.0);
    let dim = b.dim();
    let u_hi = 1.0 - region.v_lo();
    for _ in 0..REJECTION_BUDGET {
        let Some(raw) = region.draw(rng) else { continue };
        // The region density is flat in |z|^2 and in the rotated first
        // coordinate; thinning by u^{N-1} and (1-|x|^2)^{N-2} makes it uniform.
        let u = raw.modulus * raw.modulus;
        let mut accept = (u / u_hi).powi(dim as i32 - 1);
        if dim >= 2 {
            if let Some(x) = region.first_coordinate(&raw) {
                accept *= (1.0 - x.norm_sqr()).max(0.0).powi(dim as i32 - 2);
            }
        }
        if rng.random::<f64>() >= accept {
            continue;
        }
        let p = raw.to_point::<T>();
        if b.contains(&p) {
            return Ok(p);
        }
    }
    Err(Error::RejectionBudget { attempts: REJECTION_BUDGET })
}

/// Monte Carlo estimate of `mu_q(B)` for the normalized measure.
pub fn ball_measure_mc<T: Real>(b: &PseudoBall<T>, q: T, n: usize, seed: u64) -> Result<MCEstimate<T>> {
    if q <= -T::one() {
        if b.touches_boundary {
            return Err(Error::Divergent(format!("mu_{q} of a boundary-touching ball")));
        }
        if !(b.radius < (T::one() - b.center.modulus) / lit(2.0)) {
            return Err(Error::InvalidParameter(format!("q = {q} <= -1 needs radius < (1-|c|)/2")));
        }
    }
    let samples = sampling::Samples::<T>::ball(b, to_f64(q), n, seed)?;
    Ok(samples.integrate(|z| z.defect().powf(q)))
}

/// Two-sided model `R^{N+1} max(R, 1-r)^q` for `mu_q(B(w,R))` (`R^N` when `q = -1`).
pub fn ball_measure_model<T: Real>(b: &PseudoBall<T>, q: T) -> Result<T> {
    let r = b.center.modulus;
    if r == T::zero() {
        return Err(Error::InvalidParameter("ball measure model needs a center away from the origin".into()));
    }
    let big_r = b.radius;
    let n = b.dim() as i32;
    if q <= -T::one() && !(big_r < (T::one() - r) / lit(2.0)) {
        return Err(Error::InvalidParameter(format!("q = {q} <= -1 needs radius < (1-r)/2")));
    }
    if q == -T::one() {
        return Ok(big_r.powi(n));
    }
    Ok(big_r.powi(n + 1) * big_r.max(T::one() - r).powf(q))
}

/// Probed constants of the pseudo-metric geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryConstants<T: Real> {
    pub quasi_triangle_k: T,
    pub separation_c1: T,
}

impl<T: Real> GeometryConstants<T> {
    /// Empirical constants from `n` random triples in dimension `dim`.
    pub fn probe(dim: usize, n: usize, seed: u64) -> Self {
        Self { quasi_triangle_k: probe_quasi_triangle(dim, n, seed), separation_c1: probe_separation(dim, n, seed.wrapping_add(1)) }
    }
}

/// Random point for geometric probes: mixes uniform points with points
/// pushed towards the sphere so that small pseudo-distances get exercised.
pub fn probe_point<T: Real, R: Rng>(dim: usize, rng: &mut R) -> BallPoint<T> {
    let dir = sampling::sphere_point(dim, rng);
    let r = if rng.random::<bool>() { rng.random::<f64>().powf(1.0 / (2.0 * dim as f64)) } else { 1.0 - 10f64.powf(-4.0 * rng.random::<f64>()) * 0.5 };
    let r = r.min(1.0 - 1e-9);
    sampling::RawPoint::from_direction(&dir, r, (1.0 - r) * (1.0 + r)).to_point()
}

/// Point near `z` at a random scale, for triples with clustered points.
pub fn perturb<T: Real, R: Rng>(z: &BallPoint<T>, rng: &mut R) -> BallPoint<T> {
    let scale = 10f64.powf(-4.0 * rng.random::<f64>()) * (1.0 - to_f64(z.modulus)).max(1e-6) * 4.0;
    for _ in 0..64 {
        let c: Coords<T> = z
            .coords()
            .iter()
            .map(|c| {
                let g = sampling::complex_gaussian(rng) * scale;
                Complex::new(c.re + lit(g.re), c.im + lit(g.im))
            })
            .collect();
        if let Ok(p) = BallPoint::new(c) {
            return p;
        }
    }
    z.clone()
}

fn probe_triple<T: Real, R: Rng>(dim: usize, rng: &mut R) -> [BallPoint<T>; 3] {
    let x = probe_point(dim, rng);
    let y = if rng.random::<bool>() { perturb(&x, rng) } else { probe_point(dim, rng) };
    let z = if rng.random::<bool>() { perturb(&x, rng) } else { probe_point(dim, rng) };
    [x, y, z]
}

/// Largest observed `d(x,y) / (d(x,z) + d(z,y))`.
pub fn probe_quasi_triangle<T: Real>(dim: usize, n: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::one();
    for _ in 0..n {
        let [x, y, z] = probe_triple::<T, _>(dim, &mut rng);
        let den = pseudo_distance(&x, &z) + pseudo_distance(&z, &y);
        if den > T::zero() {
            worst = worst.max(pseudo_distance(&x, &y) / den);
        }
    }
    worst
}

/// Smallest `C1` for which `d(z,w0) > C1 d(w,w0)` implied
/// `|1-<z,w>| >= |1-<z,w0>|/2` on every sampled triple.
pub fn probe_separation<T: Real>(dim: usize, n: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut needed = T::one();
    let one = Complex::new(T::one(), T::zero());
    for _ in 0..n {
        let [w0, w, z] = probe_triple::<T, _>(dim, &mut rng);
        let lhs = (one - z.inner(&w)).norm();
        let rhs = (one - z.inner(&w0)).norm() / lit(2.0);
        if lhs < rhs {
            let dw = pseudo_distance(&w, &w0);
            if dw > T::zero() {
                needed = needed.max(pseudo_distance(&z, &w0) / dw);
            }
        }
    }
    needed
}

/// Which balls a family of "boundary" balls ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    /// Balls with `B ∩ ∂B ≠ ∅`.
    BoundaryTouching,
    /// Balls meeting the closed ball; adds almost-touching balls with gap `R^2`.
    Closure,
}

/// Deterministic family of balls near the boundary along the direction of `axis`.
#[derive(Clone, Debug)]
pub struct BallFamily<T: Real> {
    pub balls: Vec<PseudoBall<T>>,
}

impl<T: Real> BallFamily<T> {
    /// Centers `(1-2^{-j}) e`, radii `2^{-j} rho` for `j = 1..=j_max`, `rho` in `ratios`.
    pub fn boundary(dim: usize, j_max: u32, ratios: &[f64]) -> Self {
        let mut balls = Vec::new();
        for j in 1..=j_max {
            let s = 0.5f64.powi(j as i32);
            for &rho in ratios {
                let c = BallPoint::on_axis(dim, lit(1.0 - s)).expect("center inside ball");
                if let Ok(b) = PseudoBall::new(c, lit((s * rho).min(4.0))) {
                    if b.touches_boundary {
                        balls.push(b);
                    }
                }
            }
        }
        Self { balls }
    }

    /// Default boundary family: `j = 1..=j_max`, radii `2^{-j}{1.5, 3}`.
    pub fn dyadic(dim: usize, j_max: u32) -> Self {
        Self::boundary(dim, j_max, &[1.5, 3.0])
    }

    /// Balls of radius `R = 2^{-j}` whose closure stays a distance `R^2` from the sphere.
    pub fn almost_touching(dim: usize, j_max: u32) -> Self {
        let balls = (1..=j_max)
            .filter_map(|j| {
                let big_r = 0.5f64.powi(j as i32 + 1);
                let c = BallPoint::on_axis(dim, lit(1.0 - big_r - big_r * big_r)).ok()?;
                PseudoBall::new(c, lit(big_r)).ok()
            })
            .collect();
        Self { balls }
    }

    pub fn for_quantifier(dim: usize, j_max: u32, quantifier: Quantifier) -> Self {
        let mut fam = Self::dyadic(dim, j_max);
        if quantifier == Quantifier::Closure {
            fam.balls.extend(Self::almost_touching(dim, j_max).balls);
        }
        fam
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}
