use anyhow::Result;
use dml_core::noise::{make_stream, ComplexIncrement};
use dml_core::sme::{photocurrent_sample, BlochState, GenericSme, Scenario, ScenarioParams, Setting};

use super::check_positive;
use crate::args::RecordArgs;
use crate::output::{emit_table, Provenance, Table};
use crate::UsageError;

const COLUMNS: [&str; 10] = [
    "t", "x", "y", "z", "jdt1_re", "jdt1_im", "jdt2_re", "jdt2_im", "jdt3_re", "jdt3_im",
];

/// One trajectory of the density-operator integrator with its measured
/// record: row `t` holds the state at `t` and `J dt` accumulated over
/// `[t, t + dt)` for every channel.
pub(crate) fn run(args: RecordArgs, command_line: Vec<String>) -> Result<i32> {
    let mut prov = Provenance::new("record", command_line, args.run.seed);
    check_positive("dt", args.dt)?;
    check_positive("t-final", args.t_final)?;
    if args.stride == 0 {
        return Err(UsageError("--stride must be at least 1".into()).into());
    }
    let scenario: Scenario = args.scenario.into();
    let setting: Setting = args.setting.parse()?;
    let params = match (scenario, setting) {
        (Scenario::M3k3, Setting::Axis(k)) => ScenarioParams::m3k3(args.eta, k)?,
        (Scenario::L1k2, Setting::X | Setting::Y) => ScenarioParams::l1k2(args.eta, setting)?,
        (Scenario::L2k2, Setting::X | Setting::Y) => ScenarioParams::l2k2(args.eta, args.ratio_r, setting)?,
        _ => {
            return Err(UsageError(format!("setting '{}' does not apply to {scenario}", args.setting)).into());
        }
    };

    let sme = GenericSme::new(&params.lindblads(), &params.hamiltonian(), &params.unraveling(), args.dt)?;
    let channels = params.lindblads().len();
    let mut table = Table::new(&COLUMNS[..4 + 2 * channels]);
    let mut stream = make_stream(args.run.seed, args.trajectory);
    let mut rho = params.initial_state().to_density();
    let steps = (args.t_final / args.dt).round() as usize;
    for n in 0..steps {
        let dv = ComplexIncrement(sme.sample(&mut stream));
        if n % args.stride == 0 {
            let r = BlochState::from_density(&rho);
            let j = photocurrent_sample(&r, &params, &dv, args.dt)?;
            let mut row = vec![(n as f64 * args.dt).into(), r.x.into(), r.y.into(), r.z.into()];
            for c in j {
                row.push(c.re.into());
                row.push(c.im.into());
            }
            table.push(row);
        }
        rho = sme.step(&rho, &dv.0);
    }

    prov.dt = Some(args.dt);
    prov.n_traj = Some(1);
    prov.scenario = Some(scenario.to_string());
    prov.parameters = serde_json::json!({
        "eta": args.eta,
        "setting": setting.to_string(),
        "ratio_r": args.ratio_r,
        "t_final": args.t_final,
        "trajectory": args.trajectory,
        "stride": args.stride,
    });
    emit_table(&args.out, &table, &prov)?;
    Ok(crate::EXIT_OK)
}
