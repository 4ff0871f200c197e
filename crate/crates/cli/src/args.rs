use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dml_core::sme::{Scenario, SimConfig};
use dml_core::steering::EnsembleMode;

#[derive(Debug, Parser)]
#[command(name = "dml", version, about = "Diffusive monitoring: fine-graining feasibility and steering simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a set of unravelings has a common pure-state fine-graining.
    Feasibility(FeasibilityArgs),
    /// Steering parameter of one scenario at one efficiency.
    Steer(SteerArgs),
    /// Steady-state steering parameter over a grid of efficiencies or rate ratios.
    Sweep(SweepArgs),
    /// Efficiency at which the steady-state steering parameter crosses 1.
    Critical(CriticalArgs),
    /// Photocurrent record of a single trajectory.
    Record(RecordArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    M3k3,
    L1k2,
    L2k2,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::M3k3 => Scenario::M3k3,
            ScenarioArg::L1k2 => Scenario::L1k2,
            ScenarioArg::L2k2 => Scenario::L2k2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Symmetric,
}

impl From<ModeArg> for EnsembleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => EnsembleMode::Full,
            ModeArg::Symmetric => EnsembleMode::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Data file; a manifest is written next to it. Defaults to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Master seed; every trajectory derives its own stream from it.
    #[arg(long, env = "DML_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0: one per core). Never changes the results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Trajectories per measurement setting.
    #[arg(long = "traj", default_value_t = 10_000)]
    pub n_traj: usize,
    #[arg(long, default_value_t = 15.0)]
    pub t_final: f64,
    /// Steady-state samples are drawn uniformly from [burn-in, t-final].
    #[arg(long, default_value_t = 10.0)]
    pub burn_in: f64,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: ModeArg,
}

impl SimArgs {
    pub fn config(&self, run: &RunArgs) -> SimConfig {
        SimConfig {
            dt: self.dt,
            t_final: self.t_final,
            burn_in: self.burn_in,
            n_traj: self.n_traj,
            seed: run.seed,
            workers: run.workers,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FeasibilityArgs {
    /// Problem JSON: {"unravelings": [{"L": .., "theta": [..], "upsilon_re": [[..]], "upsilon_im": [[..]]}, ..]}
    #[arg(long, short)]
    pub input: PathBuf,
    /// Result JSON. Defaults to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Decide single-channel problems geometrically instead of by the solver.
    #[arg(long)]
    pub exact_l1: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SteerArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub eta: f64,
    /// Excitation-to-decay rate ratio (l2k2).
    #[arg(long = "ratio-r", default_value_t = 0.2)]
    pub ratio_r: f64,
    /// Steering weights a1,a2,a3 (l1k2).
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
    pub alpha: Vec<f64>,
    /// Emit S(t) on a time grid instead of the steady-state value.
    #[arg(long)]
    pub time_curve: bool,
    /// End of the time grid; defaults to 10 (m3k3), 5 (l1k2) or t-final (l2k2).
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub t_step: f64,
    /// Also write sample trajectories of the first setting as CSV.
    #[arg(long)]
    pub dump_traj: Option<PathBuf>,
    /// Trajectories to dump.
    #[arg(long, default_value_t = 10)]
    pub dump_count: usize,
    /// Steps between dumped samples.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Efficiency grid lo:hi:n.
    #[arg(long, conflicts_with = "ratio_grid")]
    pub eta_grid: Option<String>,
    /// Rate-ratio grid lo:hi:n at fixed --eta (l2k2).
    #[arg(long, requires = "eta")]
    pub ratio_grid: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "ratio-r", default_value_t = 0.2)]
    pub ratio_r: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CriticalArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Efficiency bracket lo:hi around the crossing.
    #[arg(long)]
    pub bracket: String,
    #[arg(long = "ratio-r", default_value_t = 0.2)]
    pub ratio_r: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RecordArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub eta: f64,
    /// Setting: 1, 2, 3 (m3k3) or x, y.
    #[arg(long)]
    pub setting: String,
    #[arg(long = "ratio-r", default_value_t = 0.2)]
    pub ratio_r: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_final: f64,
    /// Index of the trajectory stream to record.
    #[arg(long, default_value_t = 0)]
    pub trajectory: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
