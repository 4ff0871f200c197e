mod critical;
mod feasibility;
mod record;
mod steer;
mod sweep;

use anyhow::Result;
use dml_core::sme::{Scenario, ScenarioParams, Setting};

use crate::args::Command;

pub(crate) fn dispatch(command: Command, command_line: Vec<String>) -> Result<i32> {
    match command {
        Command::Feasibility(a) => feasibility::run(a, command_line),
        Command::Steer(a) => steer::run(a, command_line),
        Command::Sweep(a) => sweep::run(a, command_line),
        Command::Critical(a) => critical::run(a, command_line),
        Command::Record(a) => record::run(a, command_line),
    }
}

/// Shared validation for the simulation commands.
pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(crate::UsageError(format!("--{name} must be positive, got {v}")).into());
    }
    Ok(())
}

/// Parameters of the scenario's first measurement setting.
pub(crate) fn first_setting(scenario: Scenario, eta: f64, r: f64) -> Result<ScenarioParams> {
    Ok(match scenario {
        Scenario::M3k3 => ScenarioParams::m3k3(eta, 1)?,
        Scenario::L1k2 => ScenarioParams::l1k2(eta, Setting::X)?,
        Scenario::L2k2 => ScenarioParams::l2k2(eta, r, Setting::X)?,
    })
}
