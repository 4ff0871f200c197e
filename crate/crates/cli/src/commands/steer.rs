use std::path::Path;

use anyhow::Result;
use dml_core::sme::ensemble::trajectory_stream;
use dml_core::sme::scenario::{simulate_l1k2_x, simulate_scenario};
use dml_core::sme::{Scenario, ScenarioParams, SimConfig, StepStats};
use dml_core::steering::{
    estimate_s2, estimate_s2_pm, estimate_s3, s2_curve, s2_pm_curve, s3_curve, setting_ensemble, AlphaWeights,
    EnsembleMode, SampleTime, SteeringEstimate,
};

use super::{check_positive, first_setting};
use crate::args::SteerArgs;
use crate::output::{emit, emit_table, Cell, Provenance, Table};
use crate::UsageError;

pub(crate) fn run(args: SteerArgs, command_line: Vec<String>) -> Result<i32> {
    let mut prov = Provenance::new("steer", command_line, args.run.seed);
    let scenario: Scenario = args.scenario.into();
    let cfg = args.sim.config(&args.run);
    let mode: EnsembleMode = args.sim.mode.into();
    let alpha = AlphaWeights::new([args.alpha[0], args.alpha[1], args.alpha[2]])?;

    let t_max = args.t_max.unwrap_or(match scenario {
        Scenario::M3k3 => 10.0,
        Scenario::L1k2 => 5.0,
        Scenario::L2k2 => cfg.t_final,
    });
    let estimates: Vec<SteeringEstimate> = if args.time_curve {
        let times = time_grid(t_max, args.t_step)?;
        match scenario {
            Scenario::M3k3 => s3_curve(args.eta, &cfg, &times, mode)?,
            Scenario::L1k2 => s2_curve(alpha, args.eta, &cfg, &times)?,
            Scenario::L2k2 => s2_pm_curve(args.eta, args.ratio_r, &cfg, &times, mode)?,
        }
    } else {
        vec![match scenario {
            Scenario::M3k3 => estimate_s3(args.eta, &cfg, mode)?,
            Scenario::L1k2 => estimate_s2(alpha, args.eta, &cfg)?,
            Scenario::L2k2 => estimate_s2_pm(args.eta, args.ratio_r, &cfg, mode)?,
        }]
    };

    let mut table = Table::new(&["t", "S", "stderr"]);
    for e in &estimates {
        let t = match e.time {
            SampleTime::At(t) => Cell::Num(t),
            SampleTime::Steady => Cell::Text(e.time.to_string()),
        };
        table.push(vec![t, e.value.into(), e.stderr.into()]);
    }

    prov.dt = Some(cfg.dt);
    prov.n_traj = Some(cfg.n_traj);
    prov.scenario = Some(scenario.to_string());
    prov.stats = Some(estimates[0].step_stats);
    prov.parameters = serde_json::json!({
        "eta": args.eta,
        "ratio_r": args.ratio_r,
        "alpha": args.alpha,
        "mode": format!("{mode:?}").to_lowercase(),
        "t_final": cfg.t_final,
        "burn_in": cfg.burn_in,
        "time_curve": args.time_curve,
        "t_max": t_max,
        "t_step": args.t_step,
        "workers": cfg.workers,
    });
    emit_table(&args.out, &table, &prov)?;

    if let Some(path) = &args.dump_traj {
        let end = if args.time_curve { t_max } else { cfg.t_final };
        // Dumps follow σ₁ for three channels, X otherwise.
        let params = first_setting(scenario, args.eta, args.ratio_r)?;
        dump(path, &params, &cfg, end, args.dump_count, args.stride, &mut prov)?;
    }
    Ok(crate::EXIT_OK)
}

/// `0, h, 2h, …` up to and including `t_max`.
pub(crate) fn time_grid(t_max: f64, h: f64) -> Result<Vec<f64>> {
    check_positive("t-step", h)?;
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(UsageError(format!("--t-max must be non-negative, got {t_max}")).into());
    }
    let n = (t_max / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * h).collect())
}

/// The first `count` trajectories of the setting's ensemble, on the same
/// streams the curve estimators use.
fn dump(
    path: &Path,
    params: &ScenarioParams,
    cfg: &SimConfig,
    end: f64,
    count: usize,
    stride: usize,
    prov: &mut Provenance,
) -> Result<()> {
    if stride == 0 {
        return Err(UsageError("--stride must be at least 1".into()).into());
    }
    let steps = cfg.steps_to(end);
    let times: Vec<f64> = (0..=steps).step_by(stride).map(|i| i as f64 * cfg.dt).collect();
    let ensemble = setting_ensemble(params.scenario, params.setting);
    let polar = params.scenario == Scenario::L1k2;
    let mut table = if polar {
        Table::new(&["t", "beta", "zsq", "traj"])
    } else {
        Table::new(&["t", "x", "y", "z", "traj"])
    };
    let mut stats = StepStats::default();
    for i in 0..count as u64 {
        let mut stream = trajectory_stream(cfg.seed, ensemble, i);
        if polar {
            let states = simulate_l1k2_x(params.eta, cfg.dt, &times, &mut stream, &mut stats)?;
            for (t, p) in times.iter().zip(states) {
                table.push(vec![(*t).into(), p.beta.into(), p.zsq.into(), i.into()]);
            }
        } else {
            let states = simulate_scenario(params, cfg.dt, &times, &mut stream, &mut stats)?;
            for (t, r) in times.iter().zip(states) {
                table.push(vec![(*t).into(), r.x.into(), r.y.into(), r.z.into(), i.into()]);
            }
        }
    }
    prov.stats = Some(stats);
    prov.n_traj = Some(count);
    emit(Some(path), &table.render(crate::args::Format::Csv)?, prov)
}
