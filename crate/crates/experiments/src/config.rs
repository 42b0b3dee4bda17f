//! JSON scenario configuration and load-time validation of the parameter regimes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use holoball_core::weights::parse_weight;
use holoball_core::Weight;

use crate::error::{Error, Result};

/// Parameter regime of a scenario; the serialized tags are fixed wire strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Unweighted `L^p_q -> L^P_Q` boundedness frontier of `T_{a,b}`.
    #[serde(rename = "thm_keumo3")]
    UnweightedFrontier,
    /// Weak type `(1,1)` of `P_{s,t}` and failure of strong type.
    #[serde(rename = "thm_keumo4")]
    WeakType,
    /// Weighted norm of `T_{a,b}` for `a < -(N+1)`.
    #[serde(rename = "thm_keumo6")]
    BoundedKernelT,
    /// No weights for `P_{s,t}` when `s+t < -(N+1)` and `Q <= q`.
    #[serde(rename = "thm_keumo7")]
    BoundedKernelPNoWeights,
    /// Weighted norm of `P_{s,t}` for `s+t < -(N+1)`, `Q > q`.
    #[serde(rename = "thm_keumo7prime")]
    BoundedKernelP,
    /// Boundedness of `T_{a,b}` forces the two-exponent class condition.
    #[serde(rename = "thm_keumo9")]
    NecessityT,
    /// No weights for `P_{s,t}` in the remaining impossible regimes.
    #[serde(rename = "thm_keumo9prime")]
    ShiftedNoWeights,
    /// Boundedness of `P_{s,t}` forces the `K_p` condition.
    #[serde(rename = "thm_keumo11")]
    NecessityP,
    /// Good-lambda inequality between `S_{s+t,s}` and `m'_{s+t,s}`.
    #[serde(rename = "thm_keumo12")]
    GoodLambda,
    /// Weighted bound for the shifted maximal operator.
    #[serde(rename = "thm_keumo13")]
    ShiftedMaximal,
    /// `P_{s,t}`, `T_{s+t,s}`, `S_{s+t,s}` and `K_p` agree for `s+t > -1`, `q = Q`.
    #[serde(rename = "cor_keumo14")]
    EquivalenceTriangle,
    #[serde(rename = "nonexistence")]
    Nonexistence,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::UnweightedFrontier => "thm_keumo3",
            Self::WeakType => "thm_keumo4",
            Self::BoundedKernelT => "thm_keumo6",
            Self::BoundedKernelPNoWeights => "thm_keumo7",
            Self::BoundedKernelP => "thm_keumo7prime",
            Self::NecessityT => "thm_keumo9",
            Self::ShiftedNoWeights => "thm_keumo9prime",
            Self::NecessityP => "thm_keumo11",
            Self::GoodLambda => "thm_keumo12",
            Self::ShiftedMaximal => "thm_keumo13",
            Self::EquivalenceTriangle => "cor_keumo14",
            Self::Nonexistence => "nonexistence",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    #[serde(rename = "P")]
    pub big_p: Option<f64>,
    pub q: Option<f64>,
    #[serde(rename = "Q")]
    pub big_q: Option<f64>,
}

/// Sample sizes: `n` inner Monte Carlo points, `balls` dyadic depth of ball
/// families, `grid` outer evaluation points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_balls")]
    pub balls: u32,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_n() -> usize {
    2000
}
fn default_balls() -> u32 {
    6
}
fn default_grid() -> usize {
    2000
}
fn default_weight() -> String {
    "1".into()
}

impl Default for Budgets {
    fn default() -> Self {
        Self { n: default_n(), balls: default_balls(), grid: default_grid() }
    }
}

impl Budgets {
    pub fn doubled(&self) -> Self {
        Self { n: 2 * self.n, balls: self.balls, grid: 2 * self.grid }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub regime: Regime,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_weight")]
    pub weight: String,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenarios: Vec<Scenario>,
}

fn field_error(id: &str, field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("scenario `{id}`, field `{field}`: {msg}"))
}

impl Scenario {
    /// Value of a named parameter, or a config error naming the field.
    pub fn param(&self, name: &str) -> Result<f64> {
        let p = &self.params;
        let v = match name {
            "a" => p.a,
            "b" => p.b,
            "s" => p.s,
            "t" => p.t,
            "p" => p.p,
            "P" => p.big_p,
            "q" => p.q,
            "Q" => p.big_q,
            _ => None,
        };
        v.ok_or_else(|| field_error(&self.id, &format!("params.{name}"), "missing"))
    }

    pub fn parsed_weight(&self) -> Result<Weight> {
        parse_weight(&self.weight).map_err(|e| field_error(&self.id, "weight", e))
    }

    /// Checks the parameter constraints of the regime.
    pub fn validate(&self) -> Result<()> {
        let id = self.id.as_str();
        if !(1..=3).contains(&self.dim) {
            return Err(field_error(id, "N", format!("dimension {} outside 1..=3", self.dim)));
        }
        if self.budgets.n == 0 || self.budgets.grid == 0 || self.budgets.balls == 0 {
            return Err(field_error(id, "budgets", "budgets must be positive"));
        }
        self.parsed_weight()?;
        let n1 = self.dim as f64 + 1.0;
        let need = |cond: bool, what: &str| if cond { Ok(()) } else { Err(field_error(id, "params", format!("regime {} needs {what}", self.regime.tag()))) };
        let p_ok = |p: f64| need(p > 1.0 && p.is_finite(), "1 < p < ∞");
        match self.regime {
            Regime::UnweightedFrontier => {
                let (p, big_p, big_q) = (self.param("p")?, self.param("P")?, self.param("Q")?);
                for f in ["a", "b", "q"] {
                    self.param(f)?;
                }
                need(p >= 1.0 && big_p >= p && big_p.is_finite(), "1 <= p <= P < ∞")?;
                need(self.param("q")? > -1.0, "q > -1")?;
                need(big_q > -1.0, "Q > -1")
            }
            Regime::WeakType => {
                let (s, t, q) = (self.param("s")?, self.param("t")?, self.param("q")?);
                need(q == s, "q = s")?;
                need(s > -1.0 && s + t > -1.0 && s + 2.0 * t > -1.0, "s > -1, s+t > -1, s+2t > -1")
            }
            Regime::BoundedKernelT => {
                let (a, b, p) = (self.param("a")?, self.param("b")?, self.param("p")?);
                self.param("q")?;
                self.param("Q")?;
                p_ok(p)?;
                need(a < -n1, "a < -(N+1)")?;
                need(b > -1.0, "b > -1")
            }
            Regime::BoundedKernelPNoWeights | Regime::BoundedKernelP => {
                let (s, t, p, q, big_q) = (self.param("s")?, self.param("t")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                p_ok(p)?;
                need(s > -1.0, "s > -1")?;
                need(s + t < -n1, "s+t < -(N+1)")?;
                if self.regime == Regime::BoundedKernelP {
                    need(big_q > q, "Q > q")
                } else {
                    need(big_q <= q, "Q <= q")
                }
            }
            Regime::NecessityT => {
                let (a, b, p, q, big_q) = (self.param("a")?, self.param("b")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                holoball_core::classes::ClassSpec::bp_abqq(self.dim, p, a, b, q, big_q).map(|_| ()).map_err(|e| field_error(id, "params", e))
            }
            Regime::NecessityP => {
                let (s, t, p, q, big_q) = (self.param("s")?, self.param("t")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                holoball_core::classes::ClassSpec::kp(self.dim, p, s, t, q, big_q).map(|_| ()).map_err(|e| field_error(id, "params", e))
            }
            Regime::GoodLambda | Regime::ShiftedMaximal => {
                let (s, t, p, q, big_q) = (self.param("s")?, self.param("t")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                holoball_core::classes::ClassSpec::dp(self.dim, p, s, t, q, big_q).map(|_| ()).map_err(|e| field_error(id, "params", e))
            }
            Regime::EquivalenceTriangle => {
                let (s, t, p, q, big_q) = (self.param("s")?, self.param("t")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                p_ok(p)?;
                need(s > -1.0 && s + t > -1.0, "s > -1 and s+t > -1")?;
                need(q == big_q, "q = Q")
            }
            Regime::ShiftedNoWeights | Regime::Nonexistence => {
                let (s, t, p, q, big_q) = (self.param("s")?, self.param("t")?, self.param("p")?, self.param("q")?, self.param("Q")?);
                p_ok(p)?;
                need(s > -1.0, "s > -1")?;
                need(crate::experiments::ProbeCase::classify(s, t, p, q, big_q).is_some(), "an impossibility regime")
            }
        }
    }
}

impl Config {
    /// Parses and validates; parse errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let mut seen = std::collections::HashSet::new();
        for s in &cfg.scenarios {
            if !seen.insert(s.id.as_str()) {
                return Err(field_error(&s.id, "id", "duplicate scenario id"));
            }
            s.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
