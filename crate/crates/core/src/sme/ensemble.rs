//! Step rejection and deterministic parallel ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BlochState;
use crate::error::{Error, Result};
use crate::noise::{make_stream, NoiseStream};

/// A rejected step is split in two at most this many times before clamping.
pub const MAX_HALVINGS: u32 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: u64,
    /// Sub-steps retried after a norm violation.
    pub retries: u64,
    /// Steps that still violated the bound after all halvings.
    pub clamps: u64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.steps += other.steps;
        self.retries += other.retries;
        self.clamps += other.clamps;
    }
}

/// Stream for trajectory `i` of ensemble `ensemble` under `seed`. Separate
/// ensembles (e.g. the arms of one steering estimate) never share draws.
pub fn trajectory_stream(seed: u64, ensemble: u64, i: u64) -> NoiseStream {
    make_stream(seed, (ensemble << 40) | i)
}

/// Advance a Bloch vector by `dt` with increments `dw`, enforcing
/// `‖r‖² ≤ 1 + tol`. A violating step is redone as two half steps whose
/// increments are drawn from the Brownian bridge through `dw`; after
/// [`MAX_HALVINGS`] levels the result is pulled back onto the unit sphere.
pub fn advance_bloch<const N: usize, F>(
    state: BlochState,
    dt: f64,
    dw: [f64; N],
    tol: f64,
    stream: &mut NoiseStream,
    stats: &mut StepStats,
    step: &F,
) -> BlochState
where
    F: Fn(BlochState, f64, &[f64; N]) -> BlochState,
{
    stats.steps += 1;
    advance_inner(state, dt, dw, 1.0 + tol, 0, stream, stats, step)
}

#[allow(clippy::too_many_arguments)]
fn advance_inner<const N: usize, F>(
    state: BlochState,
    dt: f64,
    dw: [f64; N],
    limit: f64,
    depth: u32,
    stream: &mut NoiseStream,
    stats: &mut StepStats,
    step: &F,
) -> BlochState
where
    F: Fn(BlochState, f64, &[f64; N]) -> BlochState,
{
    let mut next = step(state, dt, &dw);
    if next.norm_sq() <= limit {
        return next;
    }
    if depth >= MAX_HALVINGS {
        stats.clamps += 1;
        next.clamp_norm(1.0);
        return next;
    }
    stats.retries += 1;
    let half = 0.5 * dt;
    let spread = (0.25 * dt).sqrt();
    let mut first = [0.0; N];
    let mut second = [0.0; N];
    for j in 0..N {
        first[j] = 0.5 * dw[j] + spread * stream.normal();
        second[j] = dw[j] - first[j];
    }
    let mid = advance_inner(state, half, first, limit, depth + 1, stream, stats, step);
    advance_inner(mid, half, second, limit, depth + 1, stream, stats, step)
}

/// Evaluate `f(i)` for `i in 0..n` and return the results in index order.
/// With `workers > 0` a dedicated pool of that size is used. The output does
/// not depend on the number of workers as long as `f` is a pure function of `i`.
pub fn run_ensemble<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let go = || (0..n as u64).into_par_iter().map(&f).collect::<Vec<T>>();
    if workers == 0 {
        Ok(go())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
        Ok(pool.install(go))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explode(s: BlochState, dt: f64, dw: &[f64; 1]) -> BlochState {
        // A step whose overshoot scales with the increment size.
        BlochState::new(s.x + dw[0] * 50.0 + dt, 0.0, 0.0)
    }

    #[test]
    fn accepted_steps_are_untouched() {
        let mut st = make_stream(0, 0);
        let mut stats = StepStats::default();
        let s = advance_bloch(BlochState::new(0.5, 0.0, 0.0), 1e-3, [0.001], 1e-2, &mut st, &mut stats, &explode);
        assert!((s.x - (0.5 + 0.05 + 1e-3)).abs() < 1e-15);
        assert_eq!(stats, StepStats { steps: 1, retries: 0, clamps: 0 });
    }

    #[test]
    fn persistent_violation_is_clamped() {
        let mut st = make_stream(0, 0);
        let mut stats = StepStats::default();
        let s = advance_bloch(BlochState::new(0.99, 0.0, 0.0), 1e-3, [0.5], 1e-2, &mut st, &mut stats, &explode);
        assert!(s.norm() <= 1.0 + 1e-15);
        assert!(stats.retries >= 1 && stats.clamps >= 1);
    }

    #[test]
    fn bridge_halves_sum_to_the_full_increment() {
        // A linear step is exact under splitting, so retries must not change it.
        let linear = |s: BlochState, _dt: f64, dw: &[f64; 2]| BlochState::new(s.x + dw[0], s.y + dw[1], 0.0);
        let reject_big = |s: BlochState, dt: f64, dw: &[f64; 2]| {
            let n = linear(s, dt, dw);
            if dw[0].abs() > 0.3 {
                BlochState::new(10.0, 0.0, 0.0)
            } else {
                n
            }
        };
        let mut st = make_stream(1, 0);
        let mut stats = StepStats::default();
        let s = advance_bloch(BlochState::default(), 1e-3, [0.5, 0.2], 1e-2, &mut st, &mut stats, &reject_big);
        if stats.clamps == 0 {
            assert!((s.x - 0.5).abs() < 1e-12 && (s.y - 0.2).abs() < 1e-12);
        }
        assert!(stats.retries >= 1);
    }

    #[test]
    fn ensemble_order_is_independent_of_workers() {
        let f = |i: u64| {
            let mut s = trajectory_stream(5, 1, i);
            (0..100).map(|_| s.normal()).sum::<f64>()
        };
        let a = run_ensemble(257, 1, f).unwrap();
        let b = run_ensemble(257, 3, f).unwrap();
        let c = run_ensemble(257, 0, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ensembles_use_disjoint_streams() {
        let mut a = trajectory_stream(0, 0, 3);
        let mut b = trajectory_stream(0, 1, 3);
        assert_ne!(a.normal(), b.normal());
    }
}
