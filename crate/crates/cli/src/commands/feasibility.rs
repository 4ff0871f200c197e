use std::fs;

use anyhow::Result;
use dml_core::feascheck::{solve_feasibility, FeasibilityProblem, FeasibilityStatus, ProblemJson, ResultJson, SolverOptions};

use crate::args::FeasibilityArgs;
use crate::output::{emit, Provenance};
use crate::{DataError, UsageError, EXIT_INFEASIBLE, EXIT_OK, EXIT_UNDECIDED};

pub(crate) fn run(args: FeasibilityArgs, command_line: Vec<String>) -> Result<i32> {
    let mut prov = Provenance::new("feasibility", command_line, args.run.seed);
    if !(args.tol > 0.0) || args.max_iter == 0 || args.restarts == 0 {
        return Err(UsageError("--tol, --max-iter and --restarts must be positive".into()).into());
    }
    let text = fs::read_to_string(&args.input)
        .map_err(|e| DataError(format!("cannot read {}: {e}", args.input.display())))?;
    let json: ProblemJson =
        serde_json::from_str(&text).map_err(|e| DataError(format!("{}: {e}", args.input.display())))?;
    let problem = FeasibilityProblem::try_from(&json)
        .map_err(|e| DataError(format!("{}: {e}", args.input.display())))?;

    let opts = SolverOptions {
        tol_feas: args.tol,
        max_iter: args.max_iter,
        seed: args.run.seed,
        restarts: args.restarts,
        workers: args.run.workers,
        exact_l1: args.exact_l1,
    };
    let result = solve_feasibility(&problem, &opts)?;

    prov.parameters = serde_json::json!({
        "input": args.input.display().to_string(),
        "channels": problem.channels(),
        "unravelings": problem.unravelings().len(),
        "tol": args.tol,
        "max_iter": args.max_iter,
        "restarts": args.restarts,
        "exact_l1": args.exact_l1,
    });
    let body = serde_json::to_string_pretty(&ResultJson::from(&result))? + "\n";
    emit(args.output.as_deref(), &body, &prov)?;
    eprintln!("{} (min eigenvalue {:e}, {} iterations)", result.status, result.min_eig, result.iterations);

    Ok(match result.status {
        FeasibilityStatus::StrictlyFeasible | FeasibilityStatus::Feasible => EXIT_OK,
        FeasibilityStatus::Infeasible => EXIT_INFEASIBLE,
        FeasibilityStatus::Undecided => EXIT_UNDECIDED,
    })
}
