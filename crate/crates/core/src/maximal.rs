//! Maximal operators over pseudo-balls, the regularization averages `R_k^b`,
//! `R_k^{b,Q}`, the regularized weight `σ`, the two-weight testing condition
//! for the fractional maximal operator and the far-field tail bound.
//!
//! Every supremum runs over a finite deterministic family of candidate balls,
//! so all values are lower bounds for the true maximal function.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ball_measure_mc, pseudo_distance, BallPoint, PseudoBall};
use crate::integration::{Integrand, MCEstimate};
use crate::sampling::Samples;
use crate::scalar::{lit, to_f64, Real};
use crate::weights::{dual_weight, Weight};

/// Which maximal operator. Boundary variants take the supremum over balls
/// `B(ζ,R)` with `R > 1-|ζ|`; the others over all balls containing `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaximalKind {
    /// `m_{a,b}`: `mu_a(B)^{-1} ∫_B |f| dmu_b`, boundary balls, `a > -1`.
    Boundary { a: f64, b: f64 },
    /// `m'_{a,b}`: `R^{-(N+1+a)} ∫_B |f| dmu_b`, boundary balls, `a > -1-N`.
    BoundaryRadial { a: f64, b: f64 },
    /// `M_{a,b}`: all balls, `a > -1`.
    Full { a: f64, b: f64 },
    /// `M'_{a,b}`: all balls, `a > -1-N`.
    FullRadial { a: f64, b: f64 },
    /// `O_{s,t} = (1-|z|^2)^t m_{s+t,s}`, `s+t > -1`.
    Shifted { s: f64, t: f64 },
    /// `O'_{s,t} = (1-|z|^2)^t m'_{s+t,s}`, `s+t > -1-N`.
    ShiftedRadial { s: f64, t: f64 },
    /// `M_γ`: `mu_b(B)^{γ-1} ∫_B |f| dmu_b`, all balls, `γ ∈ [0,1)`.
    Fractional { b: f64, gamma: f64 },
}

impl MaximalKind {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n1 = dim as f64 + 1.0;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (a, b) = self.average_exponents();
        if !(b > -1.0) {
            return bad(format!("measure exponent {b} must exceed -1"));
        }
        match *self {
            Self::Boundary { .. } | Self::Full { .. } | Self::Shifted { .. } if !(a > -1.0) => bad(format!("normalizing exponent {a} must exceed -1")),
            Self::BoundaryRadial { .. } | Self::FullRadial { .. } | Self::ShiftedRadial { .. } if !(a > -n1) => {
                bad(format!("normalizing exponent {a} must exceed -N-1"))
            }
            Self::Fractional { gamma, .. } if !(0.0..1.0).contains(&gamma) => bad(format!("γ = {gamma} must lie in [0,1)")),
            _ => Ok(()),
        }
    }

    /// `(a, b)` of the ball averages (`(s+t, s)` for the shifted kinds, `(b, b)` for `M_γ`).
    pub fn average_exponents(&self) -> (f64, f64) {
        match *self {
            Self::Boundary { a, b } | Self::BoundaryRadial { a, b } | Self::Full { a, b } | Self::FullRadial { a, b } => (a, b),
            Self::Shifted { s, t } | Self::ShiftedRadial { s, t } => (s + t, s),
            Self::Fractional { b, .. } => (b, b),
        }
    }

    pub fn boundary_only(&self) -> bool {
        matches!(self, Self::Boundary { .. } | Self::BoundaryRadial { .. } | Self::Shifted { .. } | Self::ShiftedRadial { .. })
    }

    fn radial_normalizer(&self) -> bool {
        matches!(self, Self::BoundaryRadial { .. } | Self::FullRadial { .. } | Self::ShiftedRadial { .. })
    }

    fn outer_power(&self) -> f64 {
        match *self {
            Self::Shifted { t, .. } | Self::ShiftedRadial { t, .. } => t,
            _ => 0.0,
        }
    }
}

fn rotated<T: Real>(dir: &[Complex<T>], modulus: T, phase: T) -> Result<BallPoint<T>> {
    let rot = Complex::new(phase.cos(), phase.sin());
    BallPoint::new(dir.iter().map(|c| *c * rot * modulus).collect::<Vec<_>>())
}

/// Candidate balls containing `z`: boundary-touching balls of radii `2^{1-j}`
/// down to the scale of `1-|z|`, centred along and beside the direction of `z`,
/// plus (unless `boundary_only`) interior balls at the scale of `1-|z|`.
pub fn candidate_balls<T: Real>(z: &BallPoint<T>, boundary_only: bool) -> Vec<PseudoBall<T>> {
    let dim = z.dim();
    let r = to_f64(z.modulus());
    let dir: Vec<Complex<T>> = match z.direction() {
        Some(d) => d.iter().copied().collect(),
        None => {
            let mut e = vec![Complex::new(T::zero(), T::zero()); dim];
            e[0] = Complex::new(T::one(), T::zero());
            e
        }
    };
    let gap = 1.0 - r;
    let mut out = Vec::new();
    let mut push = |c: BallPoint<T>, big_r: f64, want_touch: bool| {
        if let Ok(b) = PseudoBall::new(c, lit(big_r)) {
            if b.contains(z) && (!want_touch || b.touches_boundary) {
                out.push(b);
            }
        }
    };
    let mut big_r = 2.0f64;
    while big_r > gap / 4.0 {
        for theta in [0.5, 0.9] {
            let rho = (1.0 - theta * big_r).max(0.0);
            for offset in [0.0, 0.3, -0.3] {
                let side = offset * big_r;
                if side.abs() >= 2.0 {
                    continue;
                }
                let phase = 2.0 * (side / 2.0).asin();
                if let Ok(c) = rotated(&dir, lit(rho), lit(phase)) {
                    push(c, big_r, true);
                }
            }
        }
        big_r /= 2.0;
    }
    if !boundary_only {
        for frac in [0.125, 0.25, 0.5] {
            let big_r = frac * gap.max(1e-12);
            push(z.clone(), big_r, false);
            if let Ok(c) = z.with_modulus(lit((r - 0.5 * big_r).max(0.0))) {
                push(c, big_r, false);
            }
        }
    }
    out
}

/// One ball average of a maximal operator.
#[derive(Clone, Debug)]
pub struct BallAverage<T: Real> {
    pub ball: PseudoBall<T>,
    pub value: MCEstimate<T>,
}

/// `|f|` average over `b` in the normalization of `kind`; `None` when infinite.
pub fn ball_average<T: Real>(kind: &MaximalKind, f: &Integrand<T>, b: &PseudoBall<T>, n: usize, seed: u64) -> Result<Option<MCEstimate<T>>> {
    let (a, bb) = kind.average_exponents();
    let decay = f.decay.map_or(0.0, to_f64);
    let reaches = to_f64(b.center.modulus() + b.radius) >= 1.0;
    let mut kappa = bb + decay;
    if reaches && !(kappa > -1.0) {
        return Ok(None);
    }
    let radial = kind.radial_normalizer();
    if !radial {
        kappa = kappa.min(a);
    }
    if reaches {
        kappa = kappa.max(-0.999);
    }
    let s = Samples::ball(b, kappa, n, seed)?;
    let (ta, tb): (T, T) = (lit(a), lit(bb));
    let m = s.moments(2, |w, out| {
        let v = w.defect();
        out[0] = f.eval(w).norm() * v.powf(tb);
        out[1] = v.powf(ta);
    });
    let num = m.estimate(0);
    let dim = b.dim() as f64;
    Ok(Some(match kind {
        MaximalKind::Fractional { gamma, .. } => m.log_linear(&[T::one(), lit(gamma - 1.0)]),
        _ if radial => num.scale(b.radius.powf(lit(-(dim + 1.0 + a)))),
        _ => m.log_linear(&[T::one(), -T::one()]),
    }))
}

#[derive(Clone, Debug)]
pub struct MaximalValue<T: Real> {
    /// Largest candidate average (times `(1-|z|^2)^t` for the shifted kinds).
    pub value: MCEstimate<T>,
    pub argmax: Option<PseudoBall<T>>,
    pub per_ball: Vec<BallAverage<T>>,
    /// Some candidate average is infinite.
    pub infinite: bool,
}

/// Maximal function of `f` at `z` over `candidates` (or [`candidate_balls`] when `None`).
pub fn maximal_value<T: Real>(
    kind: &MaximalKind,
    f: &Integrand<T>,
    z: &BallPoint<T>,
    candidates: Option<Vec<PseudoBall<T>>>,
    n: usize,
    seed: u64,
) -> Result<MaximalValue<T>> {
    kind.validate(z.dim())?;
    let balls = candidates.unwrap_or_else(|| candidate_balls(z, kind.boundary_only()));
    if balls.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let averages: Vec<Option<MCEstimate<T>>> =
        balls.par_iter().enumerate().map(|(i, b)| ball_average(kind, f, b, n, seed.wrapping_add(i as u64))).collect::<Result<_>>()?;
    let infinite = averages.iter().any(Option::is_none);
    let outer: T = z.defect().powf(lit(kind.outer_power()));
    let mut best: Option<(usize, MCEstimate<T>)> = None;
    let mut per_ball = Vec::new();
    for (i, (b, v)) in balls.iter().zip(averages).enumerate() {
        if let Some(v) = v {
            if best.as_ref().is_none_or(|(_, e)| v.value > e.value) {
                best = Some((i, v));
            }
            per_ball.push(BallAverage { ball: b.clone(), value: v });
        }
    }
    let (value, argmax) = match best {
        Some((i, v)) if !infinite => (v.scale(outer), Some(balls[i].clone())),
        Some((i, v)) => (MCEstimate { value: T::infinity(), ..v }, Some(balls[i].clone())),
        None => (MCEstimate { value: T::infinity(), stderr: T::zero(), n_samples: n, seed }, None),
    };
    Ok(MaximalValue { value, argmax, per_ball, infinite })
}

/// Regularization radius parameter `k` with the derived `k' = k/(1-k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    k: f64,
}

impl RegularizationParams {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::InvalidParameter(format!("k = {k} must lie in (0,1)")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `k' = k/(1-k)`: `z' ∈ B_k(z)` implies `z ∈ B_{k'}(z')` for `k < 1/2`.
    pub fn k_prime(&self) -> f64 {
        self.k / (1.0 - self.k)
    }

    /// `k'' = (k')'`; needs `k' < 1`.
    pub fn k_double_prime(&self) -> Result<f64> {
        Self::new(self.k_prime()).map(|p| p.k_prime())
    }

    /// `k_1 = k/(1+k)`, the radius with `k_1' = k`.
    pub fn k_inner(&self) -> f64 {
        self.k / (1.0 + self.k)
    }

    /// Parameters for `k'`.
    pub fn primed(&self) -> Result<Self> {
        Self::new(self.k_prime())
    }
}

/// `B_k(z) = {w : d(z,w) < k(1-|z|)}`.
pub fn regularization_ball<T: Real>(z: &BallPoint<T>, k: f64) -> Result<PseudoBall<T>> {
    PseudoBall::proportional(z, lit(k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    /// `R_k^b f = mu_b(B_k)^{-1} ∫_{B_k} f dmu_b`.
    Rkb { b: f64 },
    /// `R_k^{b,Q} f = mu_b(B_k)^{-1} ∫_{B_k} f dmu_Q`.
    RkbQ { b: f64, big_q: f64 },
}

/// Regularized value of `f` at `z`.
pub fn regularize<T: Real>(
    kind: Regularization,
    params: RegularizationParams,
    f: &(dyn Fn(&BallPoint<T>) -> T + Sync),
    z: &BallPoint<T>,
    n: usize,
    seed: u64,
) -> Result<MCEstimate<T>> {
    let (b, q) = match kind {
        Regularization::Rkb { b } => (b, b),
        Regularization::RkbQ { b, big_q } => (b, big_q),
    };
    let ball = regularization_ball(z, params.k())?;
    let s = Samples::ball(&ball, b, n, seed)?;
    let (tb, tq): (T, T) = (lit(b), lit(q));
    let m = s.moments(2, |w, out| {
        let v = w.defect();
        out[0] = f(w) * v.powf(tq);
        out[1] = v.powf(tb);
    });
    Ok(m.log_linear(&[T::one(), -T::one()]))
}

/// `σ(z) = R_{k'}^{s,Q+pt} ω(z) (1-|z|^2)^{-t-(Q-q)/p}`, each evaluation an
/// inner average with `inner_n` points and a fixed seed.
pub fn sigma_weight<T: Real>(
    omega: &Weight<T>,
    s: f64,
    t: f64,
    q: f64,
    big_q: f64,
    p: f64,
    params: RegularizationParams,
    inner_n: usize,
    seed: u64,
) -> Result<Weight<T>> {
    if !(p > 1.0) || !(s > -1.0) {
        return Err(Error::InvalidParameter(format!("σ needs p > 1 and s > -1, got p={p}, s={s}")));
    }
    let prime = params.primed()?;
    let omega = omega.clone();
    let shift = t + (big_q - q) / p;
    let exponent = omega.boundary_exponent().map(|e| e + lit(big_q + p * t - s - shift));
    let kind = Regularization::RkbQ { b: s, big_q: big_q + p * t };
    let label = format!("σ[{omega}; s={s}, t={t}, q={q}, Q={big_q}, p={p}, k'={}]", prime.k());
    Ok(Weight::custom(label, exponent, move |z: &BallPoint<T>| {
        let avg = regularize(kind, prime, &|w: &BallPoint<T>| omega.eval(w), z, inner_n, seed).map(|e| e.value).unwrap_or_else(|_| T::nan());
        avg * z.defect().powf(lit(-shift))
    }))
}

/// Per-ball result of the fractional maximal testing condition.
#[derive(Clone, Debug)]
pub struct SawyerBall<T: Real> {
    pub ball: PseudoBall<T>,
    /// `(∫_B [M_γ(χ_B u^{1-p'})]^p v dnu)^{1/p}`.
    pub lhs: T,
    /// `(∫_B u^{1-p'} dnu)^{1/p}`.
    pub rhs: T,
}

#[derive(Clone, Debug)]
pub struct SawyerReport<T: Real> {
    pub per_ball: Vec<SawyerBall<T>>,
    /// Smallest `C_2` with `lhs <= C_2 rhs` on every ball (`∞` when some rhs diverges).
    pub c2: T,
    pub divergent: bool,
}

/// Checks `(∫_B [M_γ(χ_B u^{1-p'})]^p v dnu)^{1/p} <= C_2 (∫_B u^{1-p'} dnu)^{1/p}`
/// on each family ball, with `nu = mu_alpha`; the inner `M_γ` runs over
/// [`candidate_balls`] of each outer point.
pub fn sawyer_test<T: Real>(
    gamma: f64,
    u: &Weight<T>,
    v: &Weight<T>,
    p: f64,
    alpha: f64,
    family: &[PseudoBall<T>],
    outer_points: usize,
    n: usize,
    seed: u64,
) -> Result<SawyerReport<T>> {
    if !(0.0..1.0).contains(&gamma) || !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("need γ ∈ [0,1) and p > 1, got γ={gamma}, p={p}")));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let sigma = dual_weight(u, lit(p))?;
    let (tp, ta): (T, T) = (lit(p), lit(alpha));
    let mut per_ball = Vec::with_capacity(family.len());
    let mut divergent = false;
    for (i, b) in family.iter().enumerate() {
        let reaches = to_f64(b.center.modulus() + b.radius) >= 1.0;
        let e = sigma.boundary_exponent().map_or(0.0, to_f64) + alpha;
        if reaches && !(e > -1.0) {
            divergent = true;
            continue;
        }
        let seed_b = seed.wrapping_add(1000 * i as u64);
        let kappa = if reaches { e.max(-0.999).min(alpha.max(-0.999)) } else { alpha.max(0.0) };
        let inner = Samples::ball(b, kappa, n, seed_b)?;
        let dens: Vec<T> = inner.points.iter().zip(&inner.weights).map(|(w, &wt)| wt * sigma.eval(w) * w.defect().powf(ta)).collect();
        let nn: T = lit(inner.n.max(1) as f64);
        let rhs_val = dens.iter().fold(T::zero(), |a, &x| a + x) / nn;
        if rhs_val == T::zero() {
            per_ball.push(SawyerBall { ball: b.clone(), lhs: T::zero(), rhs: T::zero() });
            continue;
        }
        let outer = Samples::ball(b, alpha.max(-0.999), outer_points, seed_b ^ 0xa5a5)?;
        let mvals: Vec<T> = outer
            .points
            .par_iter()
            .enumerate()
            .map(|(j, x)| {
                let mut best = T::zero();
                for (c, cand) in candidate_balls(x, false).iter().enumerate() {
                    let part = inner.points.iter().zip(&dens).filter(|(w, _)| cand.contains(w)).fold(T::zero(), |a, (_, &d)| a + d) / nn;
                    let mu = ball_measure_mc(cand, ta, n.min(4096), seed_b.wrapping_add((j * 64 + c) as u64))?;
                    if mu.value > T::zero() {
                        best = best.max(part * mu.value.powf(lit(gamma - 1.0)));
                    }
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        let no: T = lit(outer.n.max(1) as f64);
        let lhs_val =
            outer.points.iter().zip(&outer.weights).zip(&mvals).fold(T::zero(), |a, ((x, &wt), &m)| a + wt * m.powf(tp) * v.eval(x) * x.defect().powf(ta)) / no;
        per_ball.push(SawyerBall { ball: b.clone(), lhs: lhs_val.powf(T::one() / tp), rhs: rhs_val.powf(T::one() / tp) });
    }
    let c2 = if divergent { T::infinity() } else { per_ball.iter().filter(|x| x.rhs > T::zero()).map(|x| x.lhs / x.rhs).fold(T::zero(), T::max) };
    Ok(SawyerReport { per_ball, c2, divergent })
}

#[derive(Clone, Debug)]
pub struct TailBound<T: Real> {
    /// `R^β ∫_{d(z0,ξ) >= R} f(ξ) d(z0,ξ)^{-(N+1+s+t+β)} dmu_s(ξ)`.
    pub tail: MCEstimate<T>,
    /// `m_{s+t,s} f(z)` (or `m'` when `s+t <= -1`) over candidates including `B(z0, 2^{k+1}R)`.
    pub maximal: MCEstimate<T>,
    pub ratio: T,
    /// `sup_k mu_{s+t}(B(z0,2^{k+1}R)) / (2^{k+1}R)^{N+1+s+t}` over the dilated balls.
    pub doubling_a: T,
    /// `a 2^{N+1+s+t} / (1-2^{-β})`.
    pub proof_constant: T,
}

/// Tail integral over the complement of `B(z0, R)` against the maximal function at `z ∈ B(z0, R)`.
pub fn tail_bound_ratio<T: Real>(
    s: f64,
    t: f64,
    z0: &BallPoint<T>,
    big_r: f64,
    f: &Integrand<T>,
    z: &BallPoint<T>,
    beta: f64,
    n: usize,
    seed: u64,
) -> Result<TailBound<T>> {
    let dim = z0.dim();
    let n1 = dim as f64 + 1.0;
    if !(beta > 0.0) || !(s + t > -n1) || !(big_r > 1.0 - to_f64(z0.modulus())) {
        return Err(Error::InvalidParameter(format!("need β > 0, s+t > -N-1 and R > 1-|z0|; got β={beta}, s+t={}, R={big_r}", s + t)));
    }
    let home = PseudoBall::new(z0.clone(), lit(big_r))?;
    if !home.contains(z) {
        return Err(Error::InvalidParameter("z must lie in B(z0, R)".into()));
    }
    let kind = if s + t > -1.0 { MaximalKind::Shifted { s, t: 0.0 } } else { MaximalKind::ShiftedRadial { s, t: 0.0 } };
    let kappa = s + f.decay.map_or(0.0, to_f64);
    if !(kappa > -1.0) {
        return Err(Error::Divergent(format!("∫ f dmu_s with boundary exponent {kappa}")));
    }
    let e = lit::<T>(n1 + s + t + beta);
    let rb: T = lit::<T>(big_r).powf(lit(beta));
    let samples = Samples::focused(z0, kappa, n, seed)?;
    let ts: T = lit(s);
    let tail = samples.integrate(|xi| {
        let d = pseudo_distance(z0, xi);
        if d >= lit(big_r) {
            f.eval(xi).norm() / d.powf(e) * xi.defect().powf(ts)
        } else {
            T::zero()
        }
    });
    let tail = tail.scale(rb);

    let mut dilated = Vec::new();
    let mut radius = 2.0 * big_r;
    while radius <= 4.0 {
        dilated.push(PseudoBall::new(z0.clone(), lit(radius))?);
        radius *= 2.0;
    }
    let mut doubling_a = T::zero();
    for (k, b) in dilated.iter().enumerate() {
        let mu = if s + t > -1.0 { ball_measure_mc(b, lit(s + t), n, seed.wrapping_add(7 + k as u64))?.value } else { b.radius.powf(lit(n1 + s + t)) };
        doubling_a = doubling_a.max(mu / b.radius.powf(lit(n1 + s + t)));
    }
    let mut candidates = candidate_balls(z, true);
    candidates.push(home);
    candidates.extend(dilated);
    let maximal = maximal_value(&kind, f, z, Some(candidates), n, seed.wrapping_add(99))?.value;
    let proof_constant = doubling_a * lit::<T>(2f64.powf(n1 + s + t) / (1.0 - 2f64.powf(-beta)));
    let ratio = if maximal.value > T::zero() { tail.value / maximal.value } else { T::zero() };
    Ok(TailBound { tail, maximal, ratio, doubling_a, proof_constant })
}
