use dml_core::sme::{Scenario, ScenarioParams, Setting, SimConfig};
use dml_core::steering::{
    analytic_s2_pm_small_r, critical_efficiency, estimate_s2, estimate_s2_pm, estimate_s3, s2_pm_curve, scan_ratio,
    steady_steering, AlphaWeights, EnsembleMode, SampleTime,
};
use dml_core::Error;

fn cfg(n: usize, workers: usize) -> SimConfig {
    SimConfig {
        dt: 2e-3,
        t_final: 6.0,
        burn_in: 4.0,
        n_traj: n,
        seed: 11,
        workers,
    }
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let a = estimate_s2_pm(0.7, 0.2, &cfg(300, 1), EnsembleMode::Full).unwrap();
    let b = estimate_s2_pm(0.7, 0.2, &cfg(300, 3), EnsembleMode::Full).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_eq!(a.step_stats, b.step_stats);
    let a = estimate_s3(0.9, &cfg(200, 1), EnsembleMode::Full).unwrap();
    let b = estimate_s3(0.9, &cfg(200, 2), EnsembleMode::Full).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
}

#[test]
fn seeds_change_the_estimate() {
    let a = estimate_s2_pm(0.7, 0.2, &cfg(200, 0), EnsembleMode::Full).unwrap();
    let mut other = cfg(200, 0);
    other.seed = 12;
    let b = estimate_s2_pm(0.7, 0.2, &other, EnsembleMode::Full).unwrap();
    assert_ne!(a.value, b.value);
}

#[test]
fn symmetric_shortcut_agrees_with_both_arms() {
    let c = cfg(2000, 0);
    let full = estimate_s2_pm(0.75, 0.2, &c, EnsembleMode::Full).unwrap();
    let sym = estimate_s2_pm(0.75, 0.2, &c, EnsembleMode::Symmetric).unwrap();
    let joint = (full.stderr.powi(2) + sym.stderr.powi(2)).sqrt();
    assert!((full.value - sym.value).abs() < 4.0 * joint, "{} vs {}", full.value, sym.value);
    assert!(full.components.contains_key("E^Y[⟨σ₂⟩²]"));
    assert!(!sym.components.contains_key("E^Y[⟨σ₂⟩²]"));
}

#[test]
fn components_are_second_moments() {
    let e = estimate_s3(0.8, &cfg(300, 0), EnsembleMode::Full).unwrap();
    assert_eq!(e.time, SampleTime::Steady);
    for (label, c) in &e.components {
        assert!((0.0..=1.0 + 1e-9).contains(&c.mean), "{label}: {}", c.mean);
    }
    let sum: f64 = ["E^1[⟨σ₁⟩²]", "E^2[⟨σ₂⟩²]", "E^3[⟨σ₃⟩²]"].iter().map(|k| e.components[*k].mean).sum();
    assert!((sum - e.value).abs() < 1e-12);
}

#[test]
fn steering_grows_with_efficiency() {
    let c = cfg(1500, 0);
    let lo = estimate_s2_pm(0.5, 0.2, &c, EnsembleMode::Full).unwrap();
    let hi = estimate_s2_pm(0.9, 0.2, &c, EnsembleMode::Full).unwrap();
    assert!(hi.value - lo.value > 4.0 * (hi.stderr + lo.stderr), "{} → {}", lo.value, hi.value);
    let s2 = estimate_s2(AlphaWeights::default(), 0.9, &c).unwrap();
    let s2_lo = estimate_s2(AlphaWeights::default(), 0.3, &c).unwrap();
    assert!(s2.value > s2_lo.value);
}

#[test]
fn curve_starts_from_the_ground_state() {
    let curve = s2_pm_curve(0.7, 0.2, &cfg(200, 0), &[0.0, 0.5, 1.0], EnsembleMode::Full).unwrap();
    // E^X[z²]/2 + E^Y[z²]/2 = 1 with x = y = 0 at t = 0.
    assert_eq!(curve[0].value, 1.0);
    assert_eq!(curve[0].stderr, 0.0);
    assert_eq!(curve[2].time, SampleTime::At(1.0));
}

#[test]
fn ratio_scan_and_small_ratio_law() {
    let rows = scan_ratio(0.7, &[0.05, 0.2], &cfg(200, 0), EnsembleMode::Symmetric).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].0, 0.2);
    assert!((analytic_s2_pm_small_r(0.5, 0.01) - 1.0).abs() < 1e-15);
    assert!((analytic_s2_pm_small_r(0.6, 0.01) - 1.008).abs() < 1e-12);
}

#[test]
fn steady_dispatch_follows_the_scenario() {
    let c = cfg(200, 0);
    let p = ScenarioParams::l2k2(0.7, 0.2, Setting::X).unwrap();
    assert_eq!(p.scenario, Scenario::L2k2);
    let a = steady_steering(&p, &c, EnsembleMode::Full).unwrap();
    let b = estimate_s2_pm(0.7, 0.2, &c, EnsembleMode::Full).unwrap();
    assert_eq!(a.value, b.value);
}

#[test]
fn invalid_requests() {
    let mut c = cfg(50, 0);
    assert!(matches!(estimate_s3(0.8, &c, EnsembleMode::Full), Err(Error::InvalidParameter(_))));
    c.n_traj = 200;
    assert!(estimate_s2_pm(1.2, 0.2, &c, EnsembleMode::Full).is_err());
    assert!(estimate_s2_pm(0.7, 0.0, &c, EnsembleMode::Full).is_err());
    c.burn_in = 7.0;
    assert!(estimate_s3(0.8, &c, EnsembleMode::Full).is_err());
}

#[test]
fn bracket_below_threshold_is_refused() {
    let template = ScenarioParams::l2k2(0.5, 0.2, Setting::X).unwrap();
    let err = critical_efficiency(&template, (0.1, 0.3), &cfg(200, 0), EnsembleMode::Symmetric).unwrap_err();
    assert!(matches!(err, Error::BracketDoesNotStraddle { .. }), "{err}");
}

#[test]
fn crossing_located_inside_a_wide_bracket() {
    let template = ScenarioParams::l2k2(0.5, 0.2, Setting::X).unwrap();
    let est = critical_efficiency(&template, (0.3, 1.0), &cfg(1500, 0), EnsembleMode::Symmetric).unwrap();
    assert!(est.eta_c > 0.45 && est.eta_c < 0.85, "{est:?}");
    assert_eq!(est.points.len(), 10);
    assert!(est.points.windows(2).all(|w| w[0].eta <= w[1].eta));
}

fn steady(n: usize) -> SimConfig {
    SimConfig {
        dt: 1e-3,
        t_final: 15.0,
        burn_in: 10.0,
        n_traj: n,
        seed: 21,
        workers: 0,
    }
}

#[test]
fn half_efficiency_never_steers() {
    let c = cfg(1000, 0);
    let s3 = estimate_s3(0.5, &c, EnsembleMode::Full).unwrap();
    let s2 = estimate_s2(AlphaWeights::default(), 0.5, &c).unwrap();
    let pm = estimate_s2_pm(0.5, 0.2, &c, EnsembleMode::Full).unwrap();
    for (name, e) in [("three-channel", s3), ("single-channel", s2), ("decay+excitation", pm)] {
        assert!(e.value <= 1.0 + 3.0 * e.stderr, "{name}: {} ± {}", e.value, e.stderr);
    }
}

#[test]
fn informative_axis_dominates_each_setting() {
    let e = estimate_s3(0.8, &cfg(500, 0), EnsembleMode::Full).unwrap();
    let axes = ["⟨σ₁⟩²", "⟨σ₂⟩²", "⟨σ₃⟩²"];
    for k in 1..=3 {
        let m = |j: usize| e.components[&format!("E^{k}[{}]", axes[j])].mean;
        for j in (0..3).filter(|&j| j + 1 != k) {
            assert!(m(k - 1) > m(j), "setting {k}: {} vs {}", m(k - 1), m(j));
        }
    }
}

#[test]
fn small_ratio_law_holds_across_efficiencies() {
    let r = 0.01;
    for eta in [0.55, 0.7, 0.85, 1.0] {
        let e = estimate_s2_pm(eta, r, &steady(3000), EnsembleMode::Symmetric).unwrap();
        let want = analytic_s2_pm_small_r(eta, r);
        let tol = (3.0 * e.stderr).max(0.1 * 8.0 * (eta - 0.5) * r);
        assert!((e.value - want).abs() <= tol, "η = {eta}: {} ± {} vs {want}", e.value, e.stderr);
    }
}

#[test]
fn sigma3_weighting_is_optimal_on_a_grid() {
    // Both arms are recorded on the same streams for every α, so S(α) differs
    // only through the weights and the comparison is tight.
    let c = SimConfig { n_traj: 400, ..cfg(400, 0) };
    let at = |alpha: [f64; 3]| {
        dml_core::steering::s2_curve(AlphaWeights::new(alpha).unwrap(), 0.7, &c, &[0.6]).unwrap().remove(0)
    };
    let best = at([0.0, 0.0, 1.0]);
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for a1 in grid {
        for a2 in grid {
            for a3 in grid {
                let e = at([a1, a2, a3]);
                let joint = (e.stderr.powi(2) + best.stderr.powi(2)).sqrt();
                assert!(e.value <= best.value + 3.0 * joint, "α = ({a1}, {a2}, {a3}): {} > {}", e.value, best.value);
            }
        }
    }
}
