use anyhow::Result;
use dml_core::sme::{Scenario, StepStats};
use dml_core::steering::{scan_ratio, steady_steering, EnsembleMode};

use super::first_setting;
use crate::args::SweepArgs;
use crate::output::{emit_table, parse_grid, Provenance, Table};
use crate::UsageError;

pub(crate) fn run(args: SweepArgs, command_line: Vec<String>) -> Result<i32> {
    let mut prov = Provenance::new("sweep", command_line, args.run.seed);
    let scenario: Scenario = args.scenario.into();
    let cfg = args.sim.config(&args.run);
    let mode: EnsembleMode = args.sim.mode.into();
    let mut stats = StepStats::default();

    let (table, grid) = match (&args.eta_grid, &args.ratio_grid) {
        (Some(text), None) => {
            let etas = parse_grid(text)?;
            let mut table = Table::new(&["eta", "S", "stderr", "n_traj"]);
            for &eta in &etas {
                let e = steady_steering(&first_setting(scenario, eta, args.ratio_r)?, &cfg, mode)?;
                stats.merge(&e.step_stats);
                table.push(vec![eta.into(), e.value.into(), e.stderr.into(), e.n_traj.into()]);
            }
            (table, text.clone())
        }
        (None, Some(text)) => {
            if scenario != Scenario::L2k2 {
                return Err(UsageError("--ratio-grid only applies to l2k2".into()).into());
            }
            let eta = args.eta.expect("clap enforces --eta with --ratio-grid");
            let ratios = parse_grid(text)?;
            let mut table = Table::new(&["R", "S", "stderr", "n_traj"]);
            for (r, e) in scan_ratio(eta, &ratios, &cfg, mode)? {
                stats.merge(&e.step_stats);
                table.push(vec![r.into(), e.value.into(), e.stderr.into(), e.n_traj.into()]);
            }
            (table, text.clone())
        }
        _ => return Err(UsageError("give exactly one of --eta-grid or --ratio-grid".into()).into()),
    };

    prov.dt = Some(cfg.dt);
    prov.n_traj = Some(cfg.n_traj);
    prov.scenario = Some(scenario.to_string());
    prov.stats = Some(stats);
    prov.parameters = serde_json::json!({
        "grid": grid,
        "eta": args.eta,
        "ratio_r": args.ratio_r,
        "mode": format!("{mode:?}").to_lowercase(),
        "t_final": cfg.t_final,
        "burn_in": cfg.burn_in,
        "workers": cfg.workers,
    });
    emit_table(&args.out, &table, &prov)?;
    Ok(crate::EXIT_OK)
}
