//! Two-average ball conditions on weights and their estimation over ball families.
//!
//! Every class quantity on a ball `B` has the form
//! `F(B)^p · ∫_B w dmu_{e1} · (∫_B w^{-1/(p-1)} dmu_{e2})^{p-1}`
//! where the normalizer `F(B)` is a product of powers of `R_B` and of
//! ball measures `mu_x(B)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::geometry::{BallFamily, PseudoBall, Quantifier};
use crate::integration::MCEstimate;
use crate::sampling::Samples;
use crate::scalar::{lit, to_f64, Real};
use crate::weights::{dual_weight, Weight};

/// Which two-average condition, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassSpec {
    /// `(ω mu_a(B)/mu_a(B)) (mu_a(B)^{-1} ∫_B ω^{-1/(p-1)} dmu_a)^{p-1}`.
    Bp { dim: usize, p: f64, a: f64, quantifier: Quantifier },
    /// Four-case condition for `T_{a,b}` from `L^p(ω mu_q)` to `L^p(ω mu_Q)`.
    BpAbqq { dim: usize, p: f64, a: f64, b: f64, q: f64, big_q: f64 },
    /// Two-case condition with normalizer `R^{(Q-q)/p}/mu_{s+t}(B)` or `R^{(Q-q)/p}/R^{N+1+s+t}`.
    Kp { dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64 },
    /// Two-case condition with normalizer `1/mu_{s+t+(Q-q)/p}(B)` or `R^{-(N+1+s+t+(Q-q)/p)}`.
    Dp { dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64 },
    /// `(mu_α(B)^{-1} ∫_B ω dmu_α)(mu_α(B)^{-1} ∫_B ω^{-1/(p-1)} dmu_α)^{p-1}`, all balls.
    ApAlpha { dim: usize, p: f64, alpha: f64 },
    /// Unnormalized `∫_B ω dmu_{Q+pt} (∫_B ω^{-1/(p-1)} dmu_{q+p'(s-q)})^{p-1}`
    /// for any parameters, including those where no weight makes it finite.
    StProduct { dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64 },
}

/// Factor `R^{r} Π mu_{x_j}(B)^{c_j}` of a class quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub radius_power: f64,
    pub measures: Vec<(f64, f64)>,
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("class exponent p must lie in (1, ∞), got {p}")))
    }
}

fn st_regime(dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64) -> Result<bool> {
    check_p(p)?;
    if !(s > -1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must exceed -1")));
    }
    let n1 = dim as f64 + 1.0;
    if s + t > -1.0 && big_q >= q {
        Ok(true)
    } else if s + t < -1.0 && s + t > -n1 && s + t + (big_q - q) / p > -1.0 {
        Ok(false)
    } else {
        Err(Error::InvalidParameter(format!(
            "(s,t,q,Q,p) = ({s},{t},{q},{big_q},{p}) is outside both regimes: \
             {{s+t > -1, Q >= q}} and {{-N-1 < s+t < -1, s+t+(Q-q)/p > -1}}"
        )))
    }
}

impl ClassSpec {
    pub fn bp(dim: usize, p: f64, a: f64, quantifier: Quantifier) -> Result<Self> {
        check_p(p)?;
        if !(a > -1.0) {
            return Err(Error::InvalidParameter(format!("(B_p) needs a > -1, got {a}")));
        }
        Ok(Self::Bp { dim, p, a, quantifier })
    }

    pub fn bp_abqq(dim: usize, p: f64, a: f64, b: f64, q: f64, big_q: f64) -> Result<Self> {
        check_p(p)?;
        if !(b > -1.0) {
            return Err(Error::InvalidParameter(format!("b = {b} must exceed -1")));
        }
        if !(a > -(dim as f64) - 1.0) {
            return Err(Error::InvalidParameter(format!("a = {a} must exceed -N-1")));
        }
        Ok(Self::BpAbqq { dim, p, a, b, q, big_q })
    }

    pub fn kp(dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64) -> Result<Self> {
        st_regime(dim, p, s, t, q, big_q)?;
        Ok(Self::Kp { dim, p, s, t, q, big_q })
    }

    pub fn dp(dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64) -> Result<Self> {
        st_regime(dim, p, s, t, q, big_q)?;
        Ok(Self::Dp { dim, p, s, t, q, big_q })
    }

    pub fn ap_alpha(dim: usize, p: f64, alpha: f64) -> Result<Self> {
        check_p(p)?;
        if !(alpha > -1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed -1")));
        }
        Ok(Self::ApAlpha { dim, p, alpha })
    }

    pub fn st_product(dim: usize, p: f64, s: f64, t: f64, q: f64, big_q: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self::StProduct { dim, p, s, t, q, big_q })
    }

    /// No weight has a finite quantity: `s+t <= -1` with `Q <= q`, or `s+t+(Q-q)/p <= -1`.
    pub fn admits_no_weight(&self) -> bool {
        match *self {
            Self::Kp { p, s, t, q, big_q, .. } | Self::Dp { p, s, t, q, big_q, .. } | Self::StProduct { p, s, t, q, big_q, .. } => {
                (s + t <= -1.0 && big_q <= q) || s + t + (big_q - q) / p <= -1.0
            }
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::StProduct { dim, .. }
            | Self::Bp { dim, .. }
            | Self::BpAbqq { dim, .. }
            | Self::Kp { dim, .. }
            | Self::Dp { dim, .. }
            | Self::ApAlpha { dim, .. } => dim,
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            Self::StProduct { p, .. } | Self::Bp { p, .. } | Self::BpAbqq { p, .. } | Self::Kp { p, .. } | Self::Dp { p, .. } | Self::ApAlpha { p, .. } => p,
        }
    }

    /// Ball quantifier the definition uses.
    pub fn quantifier(&self) -> Option<Quantifier> {
        match *self {
            Self::Bp { quantifier, .. } => Some(quantifier),
            Self::ApAlpha { .. } => None,
            _ => Some(Quantifier::BoundaryTouching),
        }
    }

    /// Exponent `e1` of the measure integrating `ω`.
    pub fn weight_exponent(&self) -> f64 {
        match *self {
            Self::Bp { a, .. } => a,
            Self::BpAbqq { big_q, .. } => big_q,
            Self::Kp { p, t, big_q, .. } | Self::Dp { p, t, big_q, .. } | Self::StProduct { p, t, big_q, .. } => big_q + p * t,
            Self::ApAlpha { alpha, .. } => alpha,
        }
    }

    /// `(q_s, b*)`: the source measure exponent and the averaging exponent of
    /// the testing inequality; the dual integral uses `q_s + p'(b* - q_s)`.
    pub fn testing_exponents(&self) -> (f64, f64) {
        match *self {
            Self::Bp { a, .. } => (a, a),
            Self::BpAbqq { b, q, .. } => (q, b),
            Self::Kp { s, q, .. } | Self::Dp { s, q, .. } | Self::StProduct { s, q, .. } => (q, s),
            Self::ApAlpha { alpha, .. } => (alpha, alpha),
        }
    }

    /// Exponent `e2` of the measure integrating `ω^{-1/(p-1)}`.
    pub fn dual_exponent(&self) -> f64 {
        let (qs, b) = self.testing_exponents();
        let pp = self.p() / (self.p() - 1.0);
        qs + pp * (b - qs)
    }

    /// Open interval of `η` for which both integrals of `(1-|z|^2)^η` converge
    /// on boundary-touching balls.
    pub fn standard_exponent_range(&self) -> (f64, f64) {
        let p = self.p();
        (-1.0 - self.weight_exponent(), (p - 1.0) * (self.dual_exponent() + 1.0))
    }

    /// The normalizer `F(B)` for the regime this spec is in.
    pub fn normalizer(&self) -> Normalizer {
        let n1 = self.dim() as f64 + 1.0;
        let only = |x: f64, c: f64| Normalizer { radius_power: 0.0, measures: vec![(x, c)] };
        match *self {
            Self::Bp { a, .. } => only(a, -1.0),
            Self::ApAlpha { alpha, .. } => only(alpha, -1.0),
            Self::BpAbqq { p, a, b, q, big_q, .. } => {
                let shift = if big_q > q { (big_q - q) / p } else { 0.0 };
                if a > -1.0 {
                    Normalizer { radius_power: 0.0, measures: vec![(b + shift, 1.0), (a, -2.0)] }
                } else {
                    Normalizer { radius_power: -2.0 * (n1 + a), measures: vec![(b + shift, 1.0)] }
                }
            }
            Self::Kp { p, s, t, q, big_q, .. } => {
                let r = (big_q - q) / p;
                if s + t > -1.0 {
                    Normalizer { radius_power: r, measures: vec![(s + t, -1.0)] }
                } else {
                    Normalizer { radius_power: r - (n1 + s + t), measures: vec![] }
                }
            }
            Self::StProduct { .. } => Normalizer { radius_power: 0.0, measures: vec![] },
            Self::Dp { p, s, t, q, big_q, .. } => {
                let x = s + t + (big_q - q) / p;
                if s + t > -1.0 {
                    only(x, -1.0)
                } else {
                    Normalizer { radius_power: -(n1 + x), measures: vec![] }
                }
            }
        }
    }
}

/// A class quantity on one ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassValue<T: Real> {
    Finite(MCEstimate<T>),
    /// A constituent integral diverges at the sphere.
    Infinite,
}

impl<T: Real> ClassValue<T> {
    pub fn value(&self) -> T {
        match self {
            Self::Finite(e) => e.value,
            Self::Infinite => T::infinity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `∫_B v^e ω dmu` diverges iff the ball reaches the sphere and the total
/// boundary exponent is at most -1.
fn diverges<T: Real>(b: &PseudoBall<T>, weight_exp: Option<T>, e: f64) -> bool {
    let reaches = b.center.modulus() + b.radius >= T::one();
    reaches && weight_exp.is_some_and(|w| to_f64(w) + e <= -1.0)
}

/// Sample of the ball with the proposal exponent matched to the most singular integrand.
pub fn class_samples<T: Real>(spec: &ClassSpec, w: &Weight<T>, b: &PseudoBall<T>, n: usize, seed: u64) -> Result<Samples<T>> {
    let dual = dual_weight(w, lit(spec.p()))?;
    let mut exps =
        vec![w.boundary_exponent().map_or(0.0, to_f64) + spec.weight_exponent(), dual.boundary_exponent().map_or(0.0, to_f64) + spec.dual_exponent()];
    exps.extend(spec.normalizer().measures.iter().map(|m| m.0));
    let mut kappa = exps.into_iter().fold(f64::INFINITY, f64::min);
    if b.center.modulus() + b.radius >= T::one() {
        kappa = kappa.max(-0.999);
    }
    Samples::ball(b, kappa, n, seed)
}

/// The class quantity of `spec` for `w` on `b`.
pub fn ball_class_quantity<T: Real>(spec: &ClassSpec, w: &Weight<T>, b: &PseudoBall<T>, n: usize, seed: u64) -> Result<ClassValue<T>> {
    if spec.quantifier() == Some(Quantifier::BoundaryTouching) && !b.touches_boundary {
        return Err(Error::InvalidParameter("class quantity needs a boundary-touching ball".into()));
    }
    let dual = dual_weight(w, lit(spec.p()))?;
    if diverges(b, w.boundary_exponent(), spec.weight_exponent()) || diverges(b, dual.boundary_exponent(), spec.dual_exponent()) {
        return Ok(ClassValue::Infinite);
    }
    let s = class_samples(spec, w, b, n, seed)?;
    Ok(ClassValue::Finite(quantity_on(spec, w, &dual, b, &s)))
}

/// Class quantity evaluated on a given sample of `b`.
pub fn quantity_on<T: Real>(spec: &ClassSpec, w: &Weight<T>, dual: &Weight<T>, b: &PseudoBall<T>, s: &Samples<T>) -> MCEstimate<T> {
    let p: T = lit(spec.p());
    let e1: T = lit(spec.weight_exponent());
    let e2: T = lit(spec.dual_exponent());
    let norm = spec.normalizer();
    let m_exps: Vec<T> = norm.measures.iter().map(|m| lit(m.0)).collect();
    let k = 2 + m_exps.len();
    let moments = s.moments(k, |z, out| {
        let v = z.defect();
        out[0] = w.eval(z) * v.powf(e1);
        out[1] = dual.eval(z) * v.powf(e2);
        for (o, &x) in out[2..].iter_mut().zip(&m_exps) {
            *o = v.powf(x);
        }
    });
    let mut exps = vec![T::one(), p - T::one()];
    exps.extend(norm.measures.iter().map(|m| p * lit::<T>(m.1)));
    let est = moments.log_linear(&exps);
    let rf = b.radius.powf(p * lit::<T>(norm.radius_power));
    est.scale(rf)
}

/// Ratio `(F ∫_B f dmu_{b*})^p ∫_B ω dmu_{e1} / ∫_B f^p ω dmu_{q_s}` of the
/// testing characterization; bounded by the class quantity on the same sample.
pub fn testing_ratio_on<T: Real>(
    spec: &ClassSpec,
    w: &Weight<T>,
    b: &PseudoBall<T>,
    s: &Samples<T>,
    f: impl Fn(&crate::geometry::BallPoint<T>) -> T + Sync,
) -> T {
    let p: T = lit(spec.p());
    let (qs, bs) = spec.testing_exponents();
    let (qs, bs): (T, T) = (lit(qs), lit(bs));
    let e1: T = lit(spec.weight_exponent());
    let norm = spec.normalizer();
    let m_exps: Vec<T> = norm.measures.iter().map(|m| lit(m.0)).collect();
    let k = 3 + m_exps.len();
    let m = s.moments(k, |z, out| {
        let v = z.defect();
        let fz = f(z);
        let wz = w.eval(z);
        out[0] = fz * v.powf(bs);
        out[1] = wz * v.powf(e1);
        out[2] = fz.powf(p) * wz * v.powf(qs);
        for (o, &x) in out[3..].iter_mut().zip(&m_exps) {
            *o = v.powf(x);
        }
    });
    let mut f_norm = b.radius.powf(lit(norm.radius_power));
    for (j, meas) in norm.measures.iter().enumerate() {
        f_norm = f_norm * m.means[3 + j].powf(lit(meas.1));
    }
    (f_norm * m.means[0]).powf(p) * m.means[1] / m.means[2]
}

/// The test function attaining the class quantity:
/// `(1-|z|^2)^{(p'-1)(b*-q_s)} ω^{-1/(p-1)}`.
pub fn extremal_test_function<T: Real>(spec: &ClassSpec, w: &Weight<T>) -> Result<Weight<T>> {
    let (qs, bs) = spec.testing_exponents();
    let p = spec.p();
    let e = (bs - qs) / (p - 1.0);
    let dual = dual_weight(w, lit(p))?;
    Ok(Weight::Product(vec![Weight::Standard(lit(e)), dual]))
}

/// Per-ball values over a family, their supremum and a divergence diagnostic.
#[derive(Clone, Debug)]
pub struct ClassConstantReport<T: Real> {
    pub spec: ClassSpec,
    pub per_ball: Vec<(PseudoBall<T>, ClassValue<T>)>,
    pub supremum: ClassValue<T>,
    /// Most negative least-squares slope of `log value` against `log R` over
    /// the finite values of each sub-family (balls with a common shape);
    /// `-∞` when some quantity is infinite.
    pub divergence_slope: Option<f64>,
    /// Slopes of the same fit over the larger-radius and smaller-radius halves.
    pub half_slopes: Option<(f64, f64)>,
    pub divergent: bool,
    /// Extremal testing function reproduced the quantity and other test
    /// functions stayed below it on every checked ball.
    pub testing_consistent: bool,
}

/// Largest radius entering the divergence slope; bigger balls are not yet self-similar.
pub const SLOPE_MAX_RADIUS: f64 = 0.25;

/// Ball shape key: `R / (1-|c|)` rounded, so dyadic families split into self-similar chains.
fn shape_key<T: Real>(b: &PseudoBall<T>) -> i64 {
    let gap = to_f64(T::one() - b.center.modulus());
    (to_f64(b.radius) / gap * 64.0).round() as i64
}

fn slope_of(points: &[(f64, f64)]) -> Option<f64> {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    fit_line(&x, &y).map(|f| f.slope)
}

/// Supremum of the class quantity over `family`, with a divergence slope.
pub fn class_constant_estimate<T: Real>(spec: &ClassSpec, w: &Weight<T>, family: &BallFamily<T>, n: usize, seed: u64) -> Result<ClassConstantReport<T>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let dual = dual_weight(w, lit(spec.p()))?;
    let extremal = extremal_test_function(spec, w)?;
    let per_ball = family
        .balls
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let seed = seed.wrapping_add(i as u64);
            let v = ball_class_quantity(spec, w, b, n, seed)?;
            let mut consistent = true;
            if v.is_finite() && i % 3 == 0 {
                let s = class_samples(spec, w, b, n, seed)?;
                let q = quantity_on(spec, w, &dual, b, &s).value;
                let attained = testing_ratio_on(spec, w, b, &s, |z| extremal.eval(z));
                let flat = testing_ratio_on(spec, w, b, &s, |_| T::one());
                let tol: T = lit(1e-6);
                consistent = (attained - q).abs() <= tol * q && flat <= q * (T::one() + tol);
            }
            Ok((b.clone(), v, consistent))
        })
        .collect::<Result<Vec<_>>>()?;
    let testing_consistent = per_ball.iter().all(|x| x.2);
    let per_ball: Vec<(PseudoBall<T>, ClassValue<T>)> = per_ball.into_iter().map(|x| (x.0, x.1)).collect();
    let supremum = per_ball
        .iter()
        .map(|x| x.1)
        .fold(None::<ClassValue<T>>, |acc, v| match acc {
            None => Some(v),
            Some(a) => Some(if v.value() > a.value() { v } else { a }),
        })
        .expect("nonempty family");
    let divergent = per_ball.iter().any(|x| !x.1.is_finite());

    let mut groups: std::collections::BTreeMap<i64, Vec<(f64, f64)>> = Default::default();
    for (b, v) in &per_ball {
        if let ClassValue::Finite(e) = v {
            if e.value > T::zero() && to_f64(b.radius) <= SLOPE_MAX_RADIUS {
                groups.entry(shape_key(b)).or_default().push((to_f64(b.radius).ln(), to_f64(e.value).ln()));
            }
        }
    }
    let mut divergence_slope: Option<f64> = None;
    let mut half_slopes: Option<(f64, f64)> = None;
    if divergent {
        divergence_slope = Some(f64::NEG_INFINITY);
        half_slopes = Some((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }
    for pts in groups.values_mut() {
        if pts.len() < 3 {
            continue;
        }
        pts.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite radii"));
        let Some(sl) = slope_of(pts) else { continue };
        if divergence_slope.is_none_or(|d| sl < d) {
            divergence_slope = Some(sl);
            let h = pts.len() / 2;
            let first = slope_of(&pts[..pts.len() - h]).unwrap_or(sl);
            let second = slope_of(&pts[h..]).unwrap_or(sl);
            half_slopes = Some((first, second));
        }
    }
    Ok(ClassConstantReport { spec: *spec, per_ball, supremum, divergence_slope, half_slopes, divergent, testing_consistent })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerdictThresholds {
    pub eps_slope: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self { eps_slope: 0.1 }
    }
}

/// Member iff the supremum is finite and the divergence slope is at least
/// `-eps`; non-member iff some quantity is infinite or the slope is below
/// `-eps` on both halves of the family.
pub fn membership_verdict<T: Real>(report: &ClassConstantReport<T>, th: &VerdictThresholds) -> Verdict {
    if !report.testing_consistent {
        return Verdict::Inconclusive;
    }
    if report.divergent {
        return Verdict::NonMember;
    }
    let eps = th.eps_slope;
    match (report.divergence_slope, report.half_slopes) {
        (Some(s), _) if s >= -eps => Verdict::Member,
        (Some(_), Some((a, b))) if a < -eps && b < -eps => Verdict::NonMember,
        (None, _) => Verdict::Inconclusive,
        _ => Verdict::Inconclusive,
    }
}

/// Family for the class quantifier: boundary dyadic balls, plus almost
/// touching balls for closure quantifiers, plus interior balls for `(A_p,α)`.
pub fn default_family<T: Real>(spec: &ClassSpec, j_max: u32) -> BallFamily<T> {
    match spec.quantifier() {
        Some(q) => BallFamily::for_quantifier(spec.dim(), j_max, q),
        None => {
            let mut fam = BallFamily::dyadic(spec.dim(), j_max);
            fam.balls.extend(BallFamily::almost_touching(spec.dim(), j_max).balls);
            fam
        }
    }
}

/// Fitted `A (mu(E)/mu(B))^{β0}` bound on `ωmu(E)/ωmu(B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AInfinityFit {
    pub a: f64,
    pub beta0: f64,
    /// Fraction of held-out pairs satisfying the bound.
    pub success_fraction: f64,
}

/// Fits the comparability bound on pairs `(mu(E)/mu(B), ωmu(E)/ωmu(B))`.
///
/// `β0` is half the least-squares log-log slope and `A` the smallest
/// constant covering the even-indexed pairs; the odd-indexed pairs are held out.
pub fn a_infinity_fit(pairs: &[(f64, f64)]) -> Option<AInfinityFit> {
    let usable: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(m, w)| m > 0.0 && w > 0.0 && m <= 1.0).collect();
    if usable.len() < 4 {
        return None;
    }
    let train: Vec<(f64, f64)> = usable.iter().copied().step_by(2).collect();
    let test: Vec<(f64, f64)> = usable.iter().copied().skip(1).step_by(2).collect();
    let logs: Vec<(f64, f64)> = train.iter().map(|&(m, w)| (m.ln(), w.ln())).collect();
    let beta0 = slope_of(&logs)?.min(1.0) / 2.0;
    if !(beta0 > 0.0) {
        return None;
    }
    let a = train.iter().map(|&(m, w)| w / m.powf(beta0)).fold(0.0, f64::max);
    let ok = test.iter().filter(|&&(m, w)| w <= a * m.powf(beta0)).count();
    Some(AInfinityFit { a, beta0, success_fraction: ok as f64 / test.len() as f64 })
}
