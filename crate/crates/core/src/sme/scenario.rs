//! Single-trajectory runners: integrate a scenario from its initial state and
//! report the state at a sorted list of sample times.
//!
//! A sample time `t` is reached after `round(t/dt)` steps. All noise comes
//! from the supplied stream in a fixed order, so a trajectory is a pure
//! function of `(stream key, params, dt, times)`.

use super::{
    advance_bloch, step_l1k2_x, step_l2k2, step_l2k2_small_r, step_m3k3, BlochState, GenericSme, Op,
    PolarState, ScenarioParams, Scenario, Setting, StepStats,
};
use crate::error::{Error, Result};
use crate::noise::NoiseStream;

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("sample times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be sorted".into()));
    }
    Ok(())
}

/// Step `state` forward, recording it whenever the step counter reaches a
/// sample time.
fn march<S: Copy>(init: S, dt: f64, times: &[f64], mut step: impl FnMut(S) -> S) -> Vec<S> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = init;
    let mut done = 0usize;
    for &t in times {
        let target = (t / dt).round() as usize;
        while done < target {
            state = step(state);
            done += 1;
        }
        out.push(state);
    }
    out
}

/// Pull a polar state back into `β, zsq ∈ [0, 1 + tol]`, `β + zsq ≤ 1 + tol`.
fn confine_polar(p: &mut PolarState, tol: f64) -> bool {
    let mut moved = p.clamp(tol);
    let total = p.beta + p.zsq;
    if total > 1.0 + tol {
        let s = 1.0 / total;
        p.beta *= s;
        p.zsq *= s;
        moved = true;
    }
    moved
}

pub fn simulate_m3k3(
    eta: f64,
    k: usize,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
    stats: &mut StepStats,
) -> Result<Vec<BlochState>> {
    check_times(times)?;
    let tol = 10.0 * dt;
    let step = |s: BlochState, h: f64, dw: &[f64; 3]| step_m3k3(s, k, eta, h, dw);
    Ok(march(BlochState::new(1.0, 0.0, 0.0), dt, times, |s| {
        let dw = [stream.wiener(dt), stream.wiener(dt), stream.wiener(dt)];
        advance_bloch(s, dt, dw, tol, stream, stats, &step)
    }))
}

/// M3K3 in polar form around axis `k`; only `(β, zsq)` evolve.
pub fn simulate_m3k3_polar(
    eta: f64,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
    stats: &mut StepStats,
) -> Result<Vec<PolarState>> {
    check_times(times)?;
    let tol = 10.0 * dt;
    // Equator start: the informative axis is perpendicular to the initial vector.
    Ok(march(PolarState::new(1.0, 0.0, 0.0), dt, times, |p| {
        let dw = [stream.wiener(dt), stream.wiener(dt), stream.wiener(dt)];
        let mut next = super::step_m3k3_polar(p, eta, dt, &dw);
        stats.steps += 1;
        if confine_polar(&mut next, tol) {
            stats.clamps += 1;
        }
        next
    }))
}

/// L1K2 X-homodyne from the equator, in polar form.
pub fn simulate_l1k2_x(
    eta: f64,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
    stats: &mut StepStats,
) -> Result<Vec<PolarState>> {
    check_times(times)?;
    let tol = 10.0 * dt;
    Ok(march(PolarState::new(1.0, 0.0, 0.0), dt, times, |p| {
        let mut next = step_l1k2_x(p, eta, dt, stream.wiener(dt));
        stats.steps += 1;
        if confine_polar(&mut next, tol) {
            stats.clamps += 1;
        }
        next
    }))
}

/// L2K2 from the ground state; the setting picks the plane.
#[allow(clippy::too_many_arguments)]
pub fn simulate_l2k2(
    eta: f64,
    r: f64,
    setting: Setting,
    gamma_minus: f64,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
    stats: &mut StepStats,
) -> Result<Vec<BlochState>> {
    check_times(times)?;
    let tol = 10.0 * dt;
    let step = |s: BlochState, h: f64, dw: &[f64; 2]| step_l2k2(s, setting, eta, gamma_minus, r, h, dw);
    Ok(march(BlochState::new(0.0, 0.0, -1.0), dt, times, |s| {
        let dw = [stream.wiener(dt), stream.wiener(dt)];
        advance_bloch(s, dt, dw, tol, stream, stats, &step)
    }))
}

/// Leading-order small-`R` dynamics from the ground state; returns `(x, z)`.
pub fn simulate_l2k2_small_r(
    eta: f64,
    r: f64,
    gamma: f64,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
) -> Result<Vec<(f64, f64)>> {
    check_times(times)?;
    Ok(march((0.0, -1.0), dt, times, |s| {
        step_l2k2_small_r(s, eta, gamma, r, dt, stream.wiener(dt))
    }))
}

/// Any scenario through the density-operator integrator, from the scenario's
/// initial state.
pub fn simulate_generic(
    params: &ScenarioParams,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
) -> Result<Vec<BlochState>> {
    check_times(times)?;
    let sme = GenericSme::new(&params.lindblads(), &params.hamiltonian(), &params.unraveling(), dt)?;
    let rho0: Op = params.initial_state().to_density();
    let states = march(rho0, dt, times, |rho| {
        let dv = sme.sample(stream);
        sme.step(&rho, &dv)
    });
    Ok(states.iter().map(BlochState::from_density).collect())
}

/// Bloch-vector runner for a scenario's production stepper. L1K2 X is
/// reported on the `x`/`z ≥ 0` branch of its polar state (only squares and
/// `x` are meaningful there); the L1K2 Y arm has no stepper.
pub fn simulate_scenario(
    params: &ScenarioParams,
    dt: f64,
    times: &[f64],
    stream: &mut NoiseStream,
    stats: &mut StepStats,
) -> Result<Vec<BlochState>> {
    match (params.scenario, params.setting) {
        (Scenario::M3k3, Setting::Axis(k)) => simulate_m3k3(params.eta, k, dt, times, stream, stats),
        (Scenario::L1k2, Setting::X) => Ok(simulate_l1k2_x(params.eta, dt, times, stream, stats)?
            .into_iter()
            .map(|p| BlochState::new(p.beta.max(0.0).sqrt(), 0.0, p.zsq.max(0.0).sqrt()))
            .collect()),
        (Scenario::L2k2, setting) => simulate_l2k2(
            params.eta,
            params.ratio_r,
            setting,
            params.gamma_minus(),
            dt,
            times,
            stream,
            stats,
        ),
        _ => Err(Error::InvalidParameter(format!(
            "no trajectory stepper for {} setting {}; its ensemble law is closed-form",
            params.scenario, params.setting
        ))),
    }
}
