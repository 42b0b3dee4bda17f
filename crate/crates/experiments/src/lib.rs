//! Scenario runner for the numerical experiments on the unit ball.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod runner;

pub use config::{Budgets, Config, Params, Regime, Scenario};
pub use error::{Error, Result};
pub use report::{emit_report, Format, Report};
pub use runner::{run_config, run_scenario, ExitStatus};
