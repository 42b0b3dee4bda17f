//! Scenario reports and their CSV/JSON emission.

use std::io::Write;

use serde::Serialize;

use holoball_core::Estimate;

use crate::error::Result;

/// Uncertainty attached to every numeric cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uncertainty {
    StdErr(f64),
    /// Closed-form or exact arithmetic.
    Exact,
    /// Output of a fit; no sampling error attached.
    Fitted,
}

impl Uncertainty {
    fn cell(&self) -> String {
        match self {
            Self::StdErr(s) => format!("{s:e}"),
            Self::Exact => "exact".into(),
            Self::Fitted => "fitted".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub quantity: String,
    pub value: f64,
    pub uncertainty: Uncertainty,
    pub n: usize,
    pub seed: u64,
    pub verdict: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Rule {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub regime: String,
    pub rows: Vec<Row>,
    pub rules: Vec<Rule>,
    pub seeds: Vec<u64>,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn new(scenario: impl Into<String>, regime: impl Into<String>) -> Self {
        Self { scenario: scenario.into(), regime: regime.into(), rows: Vec::new(), rules: Vec::new(), seeds: Vec::new(), wall_clock_s: 0.0 }
    }

    pub fn estimate(&mut self, quantity: impl Into<String>, e: &Estimate) -> &mut Self {
        self.rows.push(Row {
            quantity: quantity.into(),
            value: e.value,
            uncertainty: Uncertainty::StdErr(e.stderr),
            n: e.n_samples,
            seed: e.seed,
            verdict: None,
        });
        self.note_seed(e.seed)
    }

    pub fn exact(&mut self, quantity: impl Into<String>, value: f64) -> &mut Self {
        self.rows.push(Row { quantity: quantity.into(), value, uncertainty: Uncertainty::Exact, n: 0, seed: 0, verdict: None });
        self
    }

    pub fn fitted(&mut self, quantity: impl Into<String>, value: f64, n: usize, seed: u64) -> &mut Self {
        self.rows.push(Row { quantity: quantity.into(), value, uncertainty: Uncertainty::Fitted, n, seed, verdict: None });
        self.note_seed(seed)
    }

    /// Attaches a verdict to the last row.
    pub fn verdict(&mut self, v: impl Into<String>) -> &mut Self {
        if let Some(r) = self.rows.last_mut() {
            r.verdict = Some(v.into());
        }
        self
    }

    pub fn rule(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.rules.push(Rule { name: name.into(), passed, detail: detail.into() });
        self
    }

    fn note_seed(&mut self, seed: u64) -> &mut Self {
        if !self.seeds.contains(&seed) {
            self.seeds.push(seed);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.rules.iter().all(|r| r.passed)
    }

    pub fn find(&self, quantity: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn rule_named(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format `{s}` (csv|json)")),
        }
    }
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    scenario: &'a str,
    quantity: &'a str,
    value: f64,
    stderr: String,
    n: usize,
    seed: u64,
    verdict: &'a str,
}

/// Writes reports as CSV (`scenario,quantity,value,stderr,n,seed,verdict`,
/// rules as `rule:<name>` rows) or as a JSON array.
pub fn emit_report(reports: &[Report], format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Json => serde_json::to_writer_pretty(out, reports)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if reports.is_empty() {
                w.write_record(["scenario", "quantity", "value", "stderr", "n", "seed", "verdict"])?;
            }
            for rep in reports {
                for r in &rep.rows {
                    w.serialize(CsvRecord {
                        scenario: &rep.scenario,
                        quantity: &r.quantity,
                        value: r.value,
                        stderr: r.uncertainty.cell(),
                        n: r.n,
                        seed: r.seed,
                        verdict: r.verdict.as_deref().unwrap_or(""),
                    })?;
                }
                for rule in &rep.rules {
                    let q = format!("rule:{}", rule.name);
                    w.serialize(CsvRecord {
                        scenario: &rep.scenario,
                        quantity: &q,
                        value: if rule.passed { 1.0 } else { 0.0 },
                        stderr: "exact".into(),
                        n: 0,
                        seed: 0,
                        verdict: if rule.passed { "pass" } else { "fail" },
                    })?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}
