//! Ensemble estimators of steering parameters.
//!
//! Each measurement setting is an independent ensemble of trajectories. A
//! steering parameter is a weighted sum of setting-conditioned second
//! moments `E^k[⟨σ_j⟩²]`; its standard error is the per-trajectory sample
//! standard deviation over `√n`, combined in quadrature across settings.
//! Any value above 1 is out of reach of a detector-independent pure-state
//! model.
//!
//! Steady-state estimates sample every trajectory once, at a time drawn
//! uniformly from `[burn_in, t_final]`, so samples are independent.

mod critical;
mod estimators;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sme::{run_ensemble, SimConfig, StepStats};

pub use critical::{critical_efficiency, CriticalEstimate, CriticalStatus, LineFit};
pub use estimators::{
    analytic_s2_pm_small_r, estimate_s2, estimate_s2_pm, estimate_s3, s2_curve, s2_pm_curve, s3_curve, scan_ratio,
    setting_ensemble, steady_steering,
};

/// Smallest ensemble for which error bars are reported.
pub const MIN_TRAJECTORIES: usize = 100;

/// Trajectories evaluated per parallel batch; results are folded in index order.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleTime {
    Steady,
    At(f64),
}

impl Serialize for SampleTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleTime::Steady => s.serialize_str("STEADY"),
            SampleTime::At(t) => s.serialize_f64(*t),
        }
    }
}

impl fmt::Display for SampleTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleTime::Steady => f.write_str("STEADY"),
            SampleTime::At(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Trajectories per setting ensemble.
    pub n_traj: usize,
    pub time: SampleTime,
    pub components: BTreeMap<String, Component>,
    pub step_stats: StepStats,
}

impl SteeringEstimate {
    /// `value − 1` in units of the standard error.
    pub fn excess_sigma(&self) -> f64 {
        (self.value - 1.0) / self.stderr.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaWeights([f64; 3]);

impl AlphaWeights {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter(format!("alpha weights must lie in [0, 1], got {alpha:?}")));
        }
        Ok(AlphaWeights(alpha))
    }

    pub fn get(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for AlphaWeights {
    /// Weight `σ₃` entirely on the informative arm.
    fn default() -> Self {
        AlphaWeights([0.0, 0.0, 1.0])
    }
}

/// Whether symmetric settings are simulated separately or inferred.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// One ensemble per setting.
    #[default]
    Full,
    /// One representative setting, scaled by symmetry.
    Symmetric,
}

/// Columns recorded per trajectory and sample time: the steering summand
/// and the three squared Bloch components.
pub(crate) type Row = [f64; 4];

/// Sums and sums of squares per sample time and column, folded in index order.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    pub n: usize,
    sum: Vec<Row>,
    sumsq: Vec<Row>,
    pub stats: StepStats,
}

impl Accumulator {
    fn new(points: usize) -> Self {
        Accumulator {
            n: 0,
            sum: vec![[0.0; 4]; points],
            sumsq: vec![[0.0; 4]; points],
            stats: StepStats::default(),
        }
    }

    fn push(&mut self, rows: &[Row]) {
        self.n += 1;
        for (t, row) in rows.iter().enumerate() {
            for c in 0..4 {
                self.sum[t][c] += row[c];
                self.sumsq[t][c] += row[c] * row[c];
            }
        }
    }

    pub fn points(&self) -> usize {
        self.sum.len()
    }

    /// Mean and standard error of column `c` at sample point `t`.
    pub fn moment(&self, t: usize, c: usize) -> Component {
        let n = self.n as f64;
        let mean = self.sum[t][c] / n;
        let var = ((self.sumsq[t][c] - n * mean * mean) / (n - 1.0)).max(0.0);
        Component {
            mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Run `n` trajectories and accumulate their rows.
pub(crate) fn accumulate<F>(n: usize, points: usize, workers: usize, f: F) -> Result<Accumulator>
where
    F: Fn(u64, &mut StepStats) -> Result<Vec<Row>> + Sync + Send,
{
    let mut acc = Accumulator::new(points);
    let mut start = 0usize;
    while start < n {
        let len = CHUNK.min(n - start);
        let batch = run_ensemble(len, workers, |j| {
            let mut stats = StepStats::default();
            let rows = f(start as u64 + j, &mut stats);
            (rows, stats)
        })?;
        for (rows, stats) in batch {
            let rows = rows?;
            if rows.len() != points {
                return Err(Error::InvalidState(format!("trajectory returned {} points, expected {points}", rows.len())));
            }
            acc.push(&rows);
            acc.stats.merge(&stats);
        }
        start += len;
    }
    Ok(acc)
}

pub(crate) fn check_ensemble(cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.n_traj < MIN_TRAJECTORIES {
        return Err(Error::InvalidParameter(format!(
            "n_traj = {} is below {MIN_TRAJECTORIES}; error bars would be meaningless",
            cfg.n_traj
        )));
    }
    Ok(())
}
