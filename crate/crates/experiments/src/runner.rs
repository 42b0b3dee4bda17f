//! Dispatch of scenarios to experiments, and exit status.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use holoball_core::classes::ClassSpec;
use holoball_core::operators::OperatorSpec;

use crate::config::{Config, Regime, Scenario};
use crate::error::{Error, Result};
use crate::experiments::{
    default_gammas, equivalence_triangle, good_lambda_experiment, necessity_experiment, nonexistence_probe, norm_equivalence_experiment, probe_weights,
    shifted_maximal_experiment, unweighted_frontier, weak_type_experiment, FrontierParams, GoodLambdaParams, ProbeParams,
};
use crate::report::Report;

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    Failure = 1,
    ConfigError = 2,
}

impl ExitStatus {
    pub fn of(reports: &[Report]) -> Self {
        if reports.iter().all(Report::passed) {
            Self::Pass
        } else {
            Self::Failure
        }
    }
}

/// Configured seed, or an FNV-1a hash of the scenario id.
pub fn scenario_seed(s: &Scenario) -> u64 {
    s.seed.unwrap_or_else(|| s.id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)))
}

fn stability_rule(rep: &mut Report, other: &Report, quantity: &str, factor: f64) {
    let (Some(a), Some(b)) = (rep.find(quantity).map(|r| r.value), other.find(quantity).map(|r| r.value)) else {
        rep.rule(format!("{quantity}_stable"), false, format!("`{quantity}` missing"));
        return;
    };
    rep.fitted(format!("{quantity}_doubled"), b, other.find(quantity).map_or(0, |r| r.n), other.seeds.first().copied().unwrap_or(0));
    let ok = a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && (b / a).max(a / b) <= factor;
    rep.rule(format!("{quantity}_stable"), ok, format!("{a:.4e} -> {b:.4e} (factor {factor})"));
}

fn run_inner(sc: &Scenario, seed: u64) -> Result<Report> {
    let (id, tag, dim) = (sc.id.as_str(), sc.regime.tag(), sc.dim);
    let w = sc.parsed_weight()?;
    let b = &sc.budgets;
    let prm = |name: &str| sc.param(name);
    match sc.regime {
        Regime::UnweightedFrontier => {
            let fp = FrontierParams { dim, a: prm("a")?, b: prm("b")?, q: prm("q")?, big_q: prm("Q")?, p: prm("p")?, big_p: prm("P")? };
            unweighted_frontier(fp, b, id, tag, seed)
        }
        Regime::WeakType => {
            let (s, t, q) = (prm("s")?, prm("t")?, prm("q")?);
            let mut rep = weak_type_experiment(dim, s, t, q, b, id, tag, seed)?;
            let other = weak_type_experiment(dim, s, t, q, &b.doubled(), id, tag, seed.wrapping_add(1))?;
            stability_rule(&mut rep, &other, "weak_constant_A1", 1.25);
            Ok(rep)
        }
        Regime::BoundedKernelT | Regime::BoundedKernelP => {
            let spec =
                if sc.regime == Regime::BoundedKernelT { OperatorSpec::t(dim, prm("a")?, prm("b")?)? } else { OperatorSpec::p(dim, prm("s")?, prm("t")?)? };
            let spec = spec.with_spaces(prm("p")?, prm("q")?, prm("Q")?, w)?;
            let mut rep = norm_equivalence_experiment(&spec, b, id, tag, seed)?;
            if rep.find("ratio").is_some() {
                let other = norm_equivalence_experiment(&spec, &b.doubled(), id, tag, seed.wrapping_add(1))?;
                stability_rule(&mut rep, &other, "ratio", 4.0);
            }
            Ok(rep)
        }
        Regime::BoundedKernelPNoWeights | Regime::ShiftedNoWeights | Regime::Nonexistence => {
            let pp = ProbeParams { dim, s: prm("s")?, t: prm("t")?, p: prm("p")?, q: prm("q")?, big_q: prm("Q")? };
            nonexistence_probe(pp, &probe_weights(&w), b, id, tag, seed)
        }
        Regime::NecessityT => {
            let (a, bb, p, q, big_q) = (prm("a")?, prm("b")?, prm("p")?, prm("q")?, prm("Q")?);
            let op = OperatorSpec::t(dim, a, bb)?.with_spaces(p, q, big_q, w)?;
            necessity_experiment(&op, &ClassSpec::bp_abqq(dim, p, a, bb, q, big_q)?, b, id, tag, seed)
        }
        Regime::NecessityP => {
            let (s, t, p, q, big_q) = (prm("s")?, prm("t")?, prm("p")?, prm("q")?, prm("Q")?);
            let op = OperatorSpec::p(dim, s, t)?.with_spaces(p, q, big_q, w)?;
            necessity_experiment(&op, &ClassSpec::kp(dim, p, s, t, q, big_q)?, b, id, tag, seed)
        }
        Regime::GoodLambda => {
            let gp = GoodLambdaParams { dim, s: prm("s")?, t: prm("t")?, q: prm("q")?, big_q: prm("Q")?, p: prm("p")? };
            good_lambda_experiment(gp, &w, &default_gammas(), b, id, tag, seed)
        }
        Regime::ShiftedMaximal => shifted_maximal_experiment(dim, prm("s")?, prm("t")?, prm("q")?, prm("Q")?, prm("p")?, &w, b, id, tag, seed),
        Regime::EquivalenceTriangle => equivalence_triangle(dim, prm("s")?, prm("t")?, prm("q")?, prm("p")?, &w, b, id, tag, seed),
    }
}

/// Runs one scenario; an experiment that errors yields a report with a failing `completed` rule.
pub fn run_scenario(sc: &Scenario) -> Report {
    let start = Instant::now();
    let seed = scenario_seed(sc);
    let mut rep = match run_inner(sc, seed) {
        Ok(r) => r,
        Err(e) => {
            let mut r = Report::new(sc.id.clone(), sc.regime.tag());
            r.rule("completed", false, e.to_string());
            r
        }
    };
    rep.wall_clock_s = start.elapsed().as_secs_f64();
    rep
}

/// Runs every scenario of a config; reports come back in config order.
pub fn run_config(path: &Path) -> Result<Vec<Report>> {
    let cfg = Config::load(path)?;
    Ok(run_all(&cfg))
}

pub fn run_all(cfg: &Config) -> Vec<Report> {
    cfg.scenarios.par_iter().with_max_len(1).map(run_scenario).collect()
}

/// Exit status for the outcome of [`run_config`].
pub fn exit_status(outcome: &Result<Vec<Report>>) -> ExitStatus {
    match outcome {
        Ok(r) => ExitStatus::of(r),
        Err(Error::Config(_)) | Err(Error::Json(_)) => ExitStatus::ConfigError,
        Err(_) => ExitStatus::Failure,
    }
}
