use anyhow::Result;
use dml_core::sme::Scenario;
use dml_core::steering::{critical_efficiency, CriticalStatus, EnsembleMode};

use super::first_setting;
use crate::args::CriticalArgs;
use crate::output::{emit_table, parse_bracket, Provenance, Table};
use crate::{EXIT_OK, EXIT_UNDECIDED};

pub(crate) fn run(args: CriticalArgs, command_line: Vec<String>) -> Result<i32> {
    let mut prov = Provenance::new("critical", command_line, args.run.seed);
    let bracket = parse_bracket(&args.bracket)?;
    let scenario: Scenario = args.scenario.into();
    let cfg = args.sim.config(&args.run);
    let mode: EnsembleMode = args.sim.mode.into();
    let template = first_setting(scenario, bracket.0, args.ratio_r)?;
    let est = critical_efficiency(&template, bracket, &cfg, mode)?;

    let mut table = Table::new(&["eta", "S", "stderr"]);
    for p in &est.points {
        table.push(vec![p.eta.into(), p.value.into(), p.stderr.into()]);
    }
    prov.dt = Some(cfg.dt);
    prov.n_traj = Some(cfg.n_traj);
    prov.scenario = Some(scenario.to_string());
    prov.parameters = serde_json::json!({
        "bracket": [bracket.0, bracket.1],
        "ratio_r": args.ratio_r,
        "mode": format!("{mode:?}").to_lowercase(),
        "t_final": cfg.t_final,
        "burn_in": cfg.burn_in,
        "workers": cfg.workers,
        "result": est,
    });
    emit_table(&args.out, &table, &prov)?;

    let status = match est.status {
        CriticalStatus::Decided => "",
        CriticalStatus::Undecided => " (UNDECIDED)",
    };
    let summary = format!("eta_c = {:.4} ± {:.4}{status}", est.eta_c, est.ci);
    // Keep stdout clean for the data when no output file was given.
    if args.out.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(match est.status {
        CriticalStatus::Decided => EXIT_OK,
        CriticalStatus::Undecided => EXIT_UNDECIDED,
    })
}
