//! Weights on the ball and their expression grammar.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::BallPoint;
use crate::scalar::{lit, Real};

pub type WeightFn<T> = Arc<dyn Fn(&BallPoint<T>) -> T + Send + Sync>;

/// Radial weight given by samples `(|z|, value)`, evaluated at the nearest sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable<T: Real> {
    radii: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> RadialTable<T> {
    pub fn new(mut rows: Vec<(T, T)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("empty weight table".into()));
        }
        if rows.iter().any(|r| !(r.1 >= T::zero()) || !(r.0 >= T::zero() && r.0 < T::one())) {
            return Err(Error::InvalidParameter("weight table needs radii in [0,1) and values >= 0".into()));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite radii"));
        let (radii, values) = rows.into_iter().unzip();
        Ok(Self { radii, values })
    }

    /// Table of `f(r)` at `n` radii stratified towards the sphere: `r_j = 1 - 2^{-j m / n}`.
    pub fn stratified(n: usize, depth: f64, f: impl Fn(T) -> T) -> Result<Self> {
        let rows = (0..n)
            .map(|j| {
                let r: T = lit(1.0 - 2f64.powf(-depth * j as f64 / n as f64));
                (r, f(r))
            })
            .collect();
        Self::new(rows)
    }

    pub fn eval(&self, r: T) -> T {
        let i = self.radii.partition_point(|&x| x < r);
        if i == 0 {
            return self.values[0];
        }
        if i == self.radii.len() {
            return self.values[i - 1];
        }
        if r - self.radii[i - 1] <= self.radii[i] - r {
            self.values[i - 1]
        } else {
            self.values[i]
        }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { radii: self.radii.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Nonnegative function on the ball.
#[derive(Clone)]
pub enum Weight<T: Real> {
    Constant(T),
    /// `(1 - |z|^2)^eta`.
    Standard(T),
    Product(Vec<Weight<T>>),
    Tabulated(RadialTable<T>),
    /// Arbitrary evaluator; `boundary_exponent` is `e` if the weight behaves
    /// like `(1-|z|^2)^e` near the sphere.
    Custom {
        label: String,
        eval: WeightFn<T>,
        boundary_exponent: Option<T>,
    },
}

impl<T: Real> fmt::Debug for Weight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<T: Real> fmt::Display for Weight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "{c}"),
            Self::Standard(eta) => write!(f, "(1-|z|^2)^{eta}"),
            Self::Product(ws) => {
                let parts: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
                write!(f, "{}", parts.join(" * "))
            }
            Self::Tabulated(t) => write!(f, "table[{}]", t.len()),
            Self::Custom { label, .. } => write!(f, "{label}"),
        }
    }
}

impl<T: Real> Weight<T> {
    pub fn one() -> Self {
        Self::Constant(T::one())
    }

    pub fn custom(label: impl Into<String>, boundary_exponent: Option<T>, f: impl Fn(&BallPoint<T>) -> T + Send + Sync + 'static) -> Self {
        Self::Custom { label: label.into(), eval: Arc::new(f), boundary_exponent }
    }

    pub fn eval(&self, z: &BallPoint<T>) -> T {
        match self {
            Self::Constant(c) => *c,
            Self::Standard(eta) => {
                if *eta == T::zero() {
                    T::one()
                } else {
                    z.defect().powf(*eta)
                }
            }
            Self::Product(ws) => ws.iter().fold(T::one(), |acc, w| acc * w.eval(z)),
            Self::Tabulated(t) => t.eval(z.modulus()),
            Self::Custom { eval, .. } => eval(z),
        }
    }

    /// Exponent `e` with `weight ≈ (1-|z|^2)^e` near the sphere, when known.
    pub fn boundary_exponent(&self) -> Option<T> {
        match self {
            Self::Constant(_) => Some(T::zero()),
            Self::Standard(eta) => Some(*eta),
            Self::Product(ws) => ws.iter().map(|w| w.boundary_exponent()).sum(),
            Self::Tabulated(_) => None,
            Self::Custom { boundary_exponent, .. } => *boundary_exponent,
        }
    }

    /// `self^e`.
    pub fn pow(&self, e: T) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(c.powf(e)),
            Self::Standard(eta) => Self::Standard(*eta * e),
            Self::Product(ws) => Self::Product(ws.iter().map(|w| w.pow(e)).collect()),
            Self::Tabulated(t) => Self::Tabulated(t.map(|v| v.powf(e))),
            Self::Custom { label, eval, boundary_exponent } => {
                let inner = eval.clone();
                Self::Custom { label: format!("({label})^{e}"), eval: Arc::new(move |z| inner(z).powf(e)), boundary_exponent: boundary_exponent.map(|b| b * e) }
            }
        }
    }
}

/// Evaluates `w(z)`.
pub fn eval_weight<T: Real>(w: &Weight<T>, z: &BallPoint<T>) -> T {
    w.eval(z)
}

/// `w^{-1/(p-1)}`.
pub fn dual_weight<T: Real>(w: &Weight<T>, p: T) -> Result<Weight<T>> {
    if !(p > T::one()) {
        return Err(Error::InvalidParameter(format!("dual weight needs p > 1, got {p}")));
    }
    Ok(w.pow(-T::one() / (p - T::one())))
}

/// Parses `c`, `(1-|z|^2)^eta`, `standard(eta)` and `*`-products of these.
pub fn parse_weight<T: Real>(expr: &str) -> Result<Weight<T>> {
    let factors: Vec<&str> = split_top_level(expr);
    if factors.is_empty() {
        return Err(Error::InvalidParameter("empty weight expression".into()));
    }
    let mut ws = Vec::with_capacity(factors.len());
    for f in factors {
        ws.push(parse_factor(f.trim())?);
    }
    Ok(if ws.len() == 1 { ws.pop().expect("one factor") } else { Weight::Product(ws) })
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '*' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() || !out.is_empty() {
        out.push(&s[start..]);
    }
    out
}

fn parse_factor<T: Real>(f: &str) -> Result<Weight<T>> {
    let bad = || Error::InvalidParameter(format!("cannot parse weight factor `{f}`"));
    let compact: String = f.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(rest) = compact.strip_prefix("(1-|z|^2)") {
        let exp = match rest.strip_prefix('^') {
            Some(e) => e.trim_start_matches('(').trim_end_matches(')'),
            None if rest.is_empty() => "1",
            None => return Err(bad()),
        };
        let eta: f64 = exp.parse().map_err(|_| bad())?;
        return Ok(Weight::Standard(lit(eta)));
    }
    if let Some(rest) = compact.strip_prefix("standard(").and_then(|r| r.strip_suffix(')')) {
        let eta: f64 = rest.parse().map_err(|_| bad())?;
        return Ok(Weight::Standard(lit(eta)));
    }
    let c: f64 = compact.parse().map_err(|_| bad())?;
    if c < 0.0 {
        return Err(Error::InvalidParameter(format!("weights are nonnegative, got {c}")));
    }
    Ok(Weight::Constant(lit(c)))
}
