use std::collections::BTreeMap;

use super::{accumulate, check_ensemble, Accumulator, AlphaWeights, Component, EnsembleMode, SampleTime, SteeringEstimate};
use crate::error::{Error, Result};
use crate::noise::NoiseStream;
use crate::sme::ensemble::trajectory_stream;
use crate::sme::l1k2::y_arm_second_moments;
use crate::sme::scenario::{simulate_l1k2_x, simulate_l2k2, simulate_m3k3};
use crate::sme::{BlochState, Scenario, ScenarioParams, Setting, SimConfig, StepStats};

const ENSEMBLE_L1K2_X: u64 = 10;
const ENSEMBLE_L2K2_X: u64 = 20;
const ENSEMBLE_L2K2_Y: u64 = 21;

/// Stream family of a setting's ensemble: trajectory `i` of the ensemble
/// behind an estimate uses `trajectory_stream(seed, setting_ensemble(..), i)`.
pub fn setting_ensemble(scenario: Scenario, setting: Setting) -> u64 {
    match (scenario, setting) {
        (Scenario::M3k3, Setting::Axis(k)) => k as u64,
        (Scenario::L1k2, _) => ENSEMBLE_L1K2_X,
        (Scenario::L2k2, Setting::Y) => ENSEMBLE_L2K2_Y,
        _ => ENSEMBLE_L2K2_X,
    }
}

const AXIS_LABEL: [&str; 3] = ["⟨σ₁⟩²", "⟨σ₂⟩²", "⟨σ₃⟩²"];

/// Run one setting ensemble. `times = None` samples each trajectory once at
/// a uniform time in `[burn_in, t_final]`.
fn run_arm<S, G>(cfg: &SimConfig, ensemble: u64, times: Option<&[f64]>, sim: S, summand: G) -> Result<Accumulator>
where
    S: Fn(&mut NoiseStream, &[f64], &mut StepStats) -> Result<Vec<BlochState>> + Sync + Send,
    G: Fn(&BlochState) -> f64 + Sync + Send,
{
    let points = times.map_or(1, <[f64]>::len);
    let window = cfg.t_final - cfg.burn_in;
    accumulate(cfg.n_traj, points, cfg.workers, |i, stats| {
        let mut stream = trajectory_stream(cfg.seed, ensemble, i);
        let states = match times {
            Some(ts) => sim(&mut stream, ts, stats)?,
            None => {
                let t = cfg.burn_in + stream.uniform() * window;
                sim(&mut stream, &[t], stats)?
            }
        };
        Ok(states.iter().map(|s| [summand(s), s.x * s.x, s.y * s.y, s.z * s.z]).collect())
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("a curve needs at least one sample time".into()));
    }
    Ok(())
}

fn sample_time(times: Option<&[f64]>, t: usize) -> SampleTime {
    times.map_or(SampleTime::Steady, |ts| SampleTime::At(ts[t]))
}

/// Sum of `scale·mean(summand)` over arms, errors in quadrature.
fn combine(arms: &[(f64, &Accumulator)], t: usize) -> (f64, f64) {
    let mut value = 0.0;
    let mut var = 0.0;
    for (scale, acc) in arms {
        let m = acc.moment(t, 0);
        value += scale * m.mean;
        var += (scale * m.stderr).powi(2);
    }
    (value, var.sqrt())
}

fn record(components: &mut BTreeMap<String, Component>, arm: &str, acc: &Accumulator, t: usize) {
    for (c, label) in AXIS_LABEL.iter().enumerate() {
        components.insert(format!("E^{arm}[{label}]"), acc.moment(t, c + 1));
    }
}

fn merged_stats(arms: &[&Accumulator]) -> StepStats {
    let mut s = StepStats::default();
    for a in arms {
        s.merge(&a.stats);
    }
    s
}

fn s3_points(eta: f64, cfg: &SimConfig, times: Option<&[f64]>, mode: EnsembleMode) -> Result<Vec<SteeringEstimate>> {
    check_ensemble(cfg)?;
    ScenarioParams::m3k3(eta, 1)?;
    if times.is_some() && mode == EnsembleMode::Symmetric {
        return Err(Error::InvalidParameter(
            "the symmetric shortcut only holds at steady state; the initial state singles out σ₁".into(),
        ));
    }
    let settings: Vec<usize> = match mode {
        EnsembleMode::Full => vec![1, 2, 3],
        EnsembleMode::Symmetric => vec![3],
    };
    let scale = 3.0 / settings.len() as f64;
    let dt = cfg.dt;
    let mut arms = Vec::new();
    for &k in &settings {
        let acc = run_arm(
            cfg,
            k as u64,
            times,
            |st, ts, stats| simulate_m3k3(eta, k, dt, ts, st, stats),
            move |s| s.component(k).powi(2),
        )?;
        arms.push((k, acc));
    }
    let points = arms[0].1.points();
    Ok((0..points)
        .map(|t| {
            let weighted: Vec<(f64, &Accumulator)> = arms.iter().map(|(_, a)| (scale, a)).collect();
            let (value, stderr) = combine(&weighted, t);
            let mut components = BTreeMap::new();
            for (k, acc) in &arms {
                record(&mut components, &k.to_string(), acc, t);
            }
            SteeringEstimate {
                value,
                stderr,
                n_traj: cfg.n_traj,
                time: sample_time(times, t),
                components,
                step_stats: merged_stats(&arms.iter().map(|(_, a)| a).collect::<Vec<_>>()),
            }
        })
        .collect())
}

/// Steady-state `Σ_k E^k[⟨σ_k⟩²]` for the three-channel scenario.
pub fn estimate_s3(eta: f64, cfg: &SimConfig, mode: EnsembleMode) -> Result<SteeringEstimate> {
    Ok(s3_points(eta, cfg, None, mode)?.remove(0))
}

/// `Σ_k E^k[⟨σ_k⟩²]` at each of `times` (every trajectory is recorded at all of them).
pub fn s3_curve(eta: f64, cfg: &SimConfig, times: &[f64], mode: EnsembleMode) -> Result<Vec<SteeringEstimate>> {
    check_times(times)?;
    s3_points(eta, cfg, Some(times), mode)
}

/// `∫ₐᵇ e^{ct} dt / (b − a)`.
fn mean_exp(c: f64, a: f64, b: f64) -> f64 {
    if c.abs() * (b - a) < 1e-12 {
        (c * 0.5 * (a + b)).exp()
    } else {
        ((c * b).exp() - (c * a).exp()) / (c * (b - a))
    }
}

/// `(E^Y[x²], E^Y[y²])` averaged over the steady-state sampling window.
fn y_arm_steady(eta: f64, cfg: &SimConfig) -> (f64, f64) {
    let (a, b) = (cfg.burn_in, cfg.t_final);
    let decay = mean_exp(4.0 * (eta - 1.0), a, b);
    let mixed = mean_exp(4.0 * (eta - 1.0) - 8.0 * eta, a, b);
    (0.5 * (decay + mixed), 0.5 * (decay - mixed))
}

fn s2_points(alpha: AlphaWeights, eta: f64, cfg: &SimConfig, times: Option<&[f64]>) -> Result<Vec<SteeringEstimate>> {
    check_ensemble(cfg)?;
    ScenarioParams::l1k2(eta, Setting::X)?;
    let [a1, a2, a3] = alpha.get();
    let dt = cfg.dt;
    let x_arm = run_arm(
        cfg,
        ENSEMBLE_L1K2_X,
        times,
        |st, ts, stats| {
            Ok(simulate_l1k2_x(eta, dt, ts, st, stats)?
                .into_iter()
                .map(|p| BlochState::new(p.beta.max(0.0).sqrt(), 0.0, p.zsq.max(0.0).sqrt()))
                .collect())
        },
        move |s| a1 * s.x * s.x + a2 * s.y * s.y + a3 * s.z * s.z,
    )?;
    Ok((0..x_arm.points())
        .map(|t| {
            // The noise arm starts on the equator and never acquires ⟨σ₃⟩.
            let (yx, yy) = match times {
                Some(ts) => y_arm_second_moments(1.0, eta, ts[t]),
                None => y_arm_steady(eta, cfg),
            };
            let x = x_arm.moment(t, 0);
            let value = x.mean + (1.0 - a1) * yx + (1.0 - a2) * yy;
            let mut components = BTreeMap::new();
            record(&mut components, "X", &x_arm, t);
            let exact = |mean| Component { mean, stderr: 0.0 };
            components.insert(format!("E^Y[{}]", AXIS_LABEL[0]), exact(yx));
            components.insert(format!("E^Y[{}]", AXIS_LABEL[1]), exact(yy));
            components.insert(format!("E^Y[{}]", AXIS_LABEL[2]), exact(0.0));
            SteeringEstimate {
                value,
                stderr: x.stderr,
                n_traj: cfg.n_traj,
                time: sample_time(times, t),
                components,
                step_stats: x_arm.stats,
            }
        })
        .collect())
}

/// Steady-state `Σ_k α_k E^X[⟨σ_k⟩²] + Σ_k (1 − α_k) E^Y[⟨σ_k⟩²]` for the
/// single dephasing channel. The X arm is simulated, the Y arm is exact.
pub fn estimate_s2(alpha: AlphaWeights, eta: f64, cfg: &SimConfig) -> Result<SteeringEstimate> {
    Ok(s2_points(alpha, eta, cfg, None)?.remove(0))
}

pub fn s2_curve(alpha: AlphaWeights, eta: f64, cfg: &SimConfig, times: &[f64]) -> Result<Vec<SteeringEstimate>> {
    check_times(times)?;
    s2_points(alpha, eta, cfg, Some(times))
}

fn s2_pm_points(
    eta: f64,
    r: f64,
    cfg: &SimConfig,
    times: Option<&[f64]>,
    mode: EnsembleMode,
) -> Result<Vec<SteeringEstimate>> {
    check_ensemble(cfg)?;
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
    }
    ScenarioParams::l2k2(eta, r, Setting::X)?;
    let dt = cfg.dt;
    let x_arm = run_arm(
        cfg,
        ENSEMBLE_L2K2_X,
        times,
        |st, ts, stats| simulate_l2k2(eta, r, Setting::X, 1.0, dt, ts, st, stats),
        |s| s.x * s.x + 0.5 * s.z * s.z,
    )?;
    let y_arm = match mode {
        EnsembleMode::Full => Some(run_arm(
            cfg,
            ENSEMBLE_L2K2_Y,
            times,
            |st, ts, stats| simulate_l2k2(eta, r, Setting::Y, 1.0, dt, ts, st, stats),
            |s| s.y * s.y + 0.5 * s.z * s.z,
        )?),
        EnsembleMode::Symmetric => None,
    };
    Ok((0..x_arm.points())
        .map(|t| {
            let mut components = BTreeMap::new();
            record(&mut components, "X", &x_arm, t);
            let (value, stderr, stats) = match &y_arm {
                Some(y) => {
                    record(&mut components, "Y", y, t);
                    let (v, e) = combine(&[(1.0, &x_arm), (1.0, y)], t);
                    (v, e, merged_stats(&[&x_arm, y]))
                }
                None => {
                    let (v, e) = combine(&[(2.0, &x_arm)], t);
                    (v, e, x_arm.stats)
                }
            };
            SteeringEstimate {
                value,
                stderr,
                n_traj: cfg.n_traj,
                time: sample_time(times, t),
                components,
                step_stats: stats,
            }
        })
        .collect())
}

/// Steady-state `E^X[⟨σ₁⟩²] + E^Y[⟨σ₂⟩²] + (E^X[⟨σ₃⟩²] + E^Y[⟨σ₃⟩²])/2` for
/// decay plus excitation. The two arms are mirror images, so
/// [`EnsembleMode::Symmetric`] doubles the X arm.
pub fn estimate_s2_pm(eta: f64, r: f64, cfg: &SimConfig, mode: EnsembleMode) -> Result<SteeringEstimate> {
    Ok(s2_pm_points(eta, r, cfg, None, mode)?.remove(0))
}

pub fn s2_pm_curve(eta: f64, r: f64, cfg: &SimConfig, times: &[f64], mode: EnsembleMode) -> Result<Vec<SteeringEstimate>> {
    check_times(times)?;
    s2_pm_points(eta, r, cfg, Some(times), mode)
}

/// Leading-order `S^II_± ≈ 1 + 8(η − ½)R`, meaningful for `R ≲ 0.05`.
pub fn analytic_s2_pm_small_r(eta: f64, r: f64) -> f64 {
    1.0 + 8.0 * (eta - 0.5) * r
}

/// The scenario's steady-state steering parameter at `params.eta`.
pub fn steady_steering(params: &ScenarioParams, cfg: &SimConfig, mode: EnsembleMode) -> Result<SteeringEstimate> {
    match params.scenario {
        Scenario::M3k3 => estimate_s3(params.eta, cfg, mode),
        Scenario::L1k2 => estimate_s2(AlphaWeights::default(), params.eta, cfg),
        Scenario::L2k2 => estimate_s2_pm(params.eta, params.ratio_r, cfg, mode),
    }
}

/// `S^II_±` over a grid of `R` at fixed efficiency.
pub fn scan_ratio(eta: f64, ratios: &[f64], cfg: &SimConfig, mode: EnsembleMode) -> Result<Vec<(f64, SteeringEstimate)>> {
    ratios.iter().map(|&r| Ok((r, estimate_s2_pm(eta, r, cfg, mode)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(n: usize) -> SimConfig {
        SimConfig {
            dt: 2e-3,
            t_final: 4.0,
            burn_in: 3.0,
            n_traj: n,
            seed: 3,
            workers: 1,
        }
    }

    #[test]
    fn zero_efficiency_never_steers() {
        let cfg = quick(200);
        let s3 = estimate_s3(0.0, &cfg, EnsembleMode::Full).unwrap();
        assert!(s3.value < 1e-6, "{}", s3.value);
        let s2 = estimate_s2(AlphaWeights::default(), 0.0, &cfg).unwrap();
        assert!(s2.value <= 1.0 + 3.0 * s2.stderr);
        let pm = estimate_s2_pm(0.0, 0.2, &cfg, EnsembleMode::Full).unwrap();
        assert!(pm.value <= 1.0 + 3.0 * pm.stderr, "{}", pm.value);
    }

    #[test]
    fn s2_starts_at_one() {
        let c = s2_curve(AlphaWeights::default(), 0.6, &quick(100), &[0.0]).unwrap();
        assert!((c[0].value - 1.0).abs() < 1e-15);
        assert_eq!(c[0].stderr, 0.0);
    }

    #[test]
    fn s3_curve_starts_at_one() {
        let c = s3_curve(0.7, &quick(100), &[0.0, 0.1], EnsembleMode::Full).unwrap();
        assert!((c[0].value - 1.0).abs() < 1e-15);
        assert!(c[1].value < 1.0);
        assert!(s3_curve(0.7, &quick(100), &[0.0], EnsembleMode::Symmetric).is_err());
    }

    #[test]
    fn components_are_probabilities() {
        let e = estimate_s2_pm(0.8, 0.3, &quick(200), EnsembleMode::Full).unwrap();
        assert_eq!(e.components.len(), 6);
        for c in e.components.values() {
            assert!((0.0..=1.0 + 1e-9).contains(&c.mean));
        }
        // The two arms are mirror images.
        let xx = e.components["E^X[⟨σ₁⟩²]"];
        let yy = e.components["E^Y[⟨σ₂⟩²]"];
        assert!((xx.mean - yy.mean).abs() < 4.0 * (xx.stderr.hypot(yy.stderr)));
    }

    #[test]
    fn small_r_formula() {
        assert_eq!(analytic_s2_pm_small_r(0.5, 0.03), 1.0);
        assert!((analytic_s2_pm_small_r(1.0, 0.01) - 1.04).abs() < 1e-15);
        assert!(analytic_s2_pm_small_r(0.507, 0.01) > 1.0);
    }

    #[test]
    fn steady_window_average_of_exponential() {
        assert!((mean_exp(0.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        let direct = ((-2.0f64).exp() - (-1.0f64).exp()) / -1.0;
        assert!((mean_exp(-1.0, 1.0, 2.0) - direct).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_ensembles_and_bad_ratio() {
        assert!(estimate_s3(0.5, &quick(50), EnsembleMode::Full).is_err());
        assert!(estimate_s2_pm(0.5, 0.0, &quick(200), EnsembleMode::Full).is_err());
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let a = estimate_s2_pm(0.7, 0.2, &quick(300), EnsembleMode::Full).unwrap();
        let b = estimate_s2_pm(0.7, 0.2, &SimConfig { workers: 3, ..quick(300) }, EnsembleMode::Full).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
