use dml_core::noise::make_stream;
use dml_core::sme::ensemble::trajectory_stream;
use dml_core::sme::scenario::{simulate_generic, simulate_scenario};
use dml_core::sme::{
    integrate_generic, photocurrent_sample, run_ensemble, BlochState, GenericSme, ScenarioParams, Setting, SimConfig,
    StepStats,
};

fn mean(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn ensemble_mean_follows_the_master_equation() {
    // Averaged over the record, σ₃ dephasing gives ⟨σ₁⟩(t) = e^{−2t}.
    let p = ScenarioParams::l1k2(0.6, Setting::X).unwrap();
    let xs = run_ensemble(1500, 0, |i| {
        let mut st = trajectory_stream(5, 0, i);
        simulate_generic(&p, 1e-3, &[0.5], &mut st).unwrap()[0].x
    })
    .unwrap();
    let (m, se) = mean(&xs);
    assert!((m - (-1.0_f64).exp()).abs() < 4.0 * se + 2e-3, "{m} ± {se}");
}

#[test]
fn every_stepper_stays_in_the_ball() {
    let cases = [
        ScenarioParams::m3k3(1.0, 2).unwrap(),
        ScenarioParams::l1k2(1.0, Setting::X).unwrap(),
        ScenarioParams::l2k2(1.0, 0.3, Setting::X).unwrap(),
        ScenarioParams::l2k2(0.9, 0.3, Setting::Y).unwrap(),
    ];
    let times: Vec<f64> = (0..=40).map(|i| 0.05 * i as f64).collect();
    for p in &cases {
        let mut stats = StepStats::default();
        for i in 0..20 {
            let mut st = trajectory_stream(9, 0, i);
            let states = simulate_scenario(p, 2e-3, &times, &mut st, &mut stats).unwrap();
            for s in states {
                assert!(s.norm_sq() <= 1.0 + 10.0 * 2e-3 + 1e-12, "{p:?}: {s:?}");
            }
        }
        assert!(stats.steps >= 20 * 1000);
    }
}

#[test]
fn same_stream_same_trajectory() {
    let p = ScenarioParams::l2k2(0.8, 0.2, Setting::Y).unwrap();
    let run = || {
        let mut st = make_stream(3, 17);
        let mut stats = StepStats::default();
        simulate_scenario(&p, 1e-3, &[0.3, 0.9], &mut st, &mut stats).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn stored_trajectory_is_valid_density_matrices() {
    let p = ScenarioParams::m3k3(0.7, 1).unwrap();
    let cfg = SimConfig {
        dt: 1e-3,
        t_final: 1.0,
        burn_in: 0.5,
        ..SimConfig::default()
    };
    let mut st = make_stream(1, 1);
    let traj = integrate_generic(
        &p.lindblads(),
        &p.hamiltonian(),
        &p.unraveling(),
        &p.initial_state().to_density(),
        &cfg,
        &mut st,
        100,
    )
    .unwrap();
    assert_eq!(traj.times.len(), traj.states.len());
    assert!((traj.times[1] - 0.1).abs() < 1e-12);
    for rho in &traj.states {
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(BlochState::from_density(rho).norm() <= 1.0 + 1e-9);
    }
}

#[test]
fn photocurrent_mean_tracks_the_state() {
    // For X-homodyne of σ₃ dephasing, E[J dt | ρ] = 2η⟨σ₃⟩dt.
    let p = ScenarioParams::l1k2(0.8, Setting::X).unwrap();
    let sme = GenericSme::new(&p.lindblads(), &p.hamiltonian(), &p.unraveling(), 1e-3).unwrap();
    let state = BlochState::new(0.0, 0.6, 0.8);
    let mut st = make_stream(2, 0);
    let n = 20_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let dv = dml_core::noise::ComplexIncrement(sme.sample(&mut st));
            photocurrent_sample(&state, &p, &dv, 1e-3).unwrap()[0].re
        })
        .collect();
    let (m, se) = mean(&samples);
    assert!((m - 2.0 * 0.8 * 0.8 * 1e-3).abs() < 4.0 * se, "{m} ± {se}");
}

#[test]
fn polar_and_cartesian_three_channel_agree() {
    use dml_core::sme::scenario::{simulate_m3k3, simulate_m3k3_polar};
    let (eta, n, times) = (0.8, 3000, [0.5, 1.5]);
    let cart = run_ensemble(n, 0, |i| {
        let mut st = trajectory_stream(4, 1, i);
        simulate_m3k3(eta, 3, 1e-3, &times, &mut st, &mut StepStats::default()).unwrap()
    })
    .unwrap();
    let polar = run_ensemble(n, 0, |i| {
        let mut st = trajectory_stream(4, 2, i);
        simulate_m3k3_polar(eta, 1e-3, &times, &mut st, &mut StepStats::default()).unwrap()
    })
    .unwrap();
    for k in 0..times.len() {
        let b_cart = mean(&cart.iter().map(|r| r[k].x * r[k].x + r[k].y * r[k].y).collect::<Vec<_>>());
        let b_pol = mean(&polar.iter().map(|r| r[k].beta).collect::<Vec<_>>());
        let z_cart = mean(&cart.iter().map(|r| r[k].z * r[k].z).collect::<Vec<_>>());
        let z_pol = mean(&polar.iter().map(|r| r[k].zsq).collect::<Vec<_>>());
        for (a, b) in [(b_cart, b_pol), (z_cart, z_pol)] {
            assert!((a.0 - b.0).abs() <= 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt(), "t = {}: {a:?} vs {b:?}", times[k]);
        }
    }
}

#[test]
fn halving_the_step_moves_the_mean_less_than_the_error_bar() {
    use dml_core::sme::{step_l1k2_x, PolarState};
    // Coarse and fine paths share one Brownian motion: every coarse increment
    // is the sum of two fine ones.
    let (eta, dt, n) = (0.7, 2e-3, 100_000);
    let pairs = run_ensemble(n, 0, |i| {
        let mut st = trajectory_stream(8, 0, i);
        let (mut coarse, mut fine) = (PolarState::new(1.0, 0.0, 0.0), PolarState::new(1.0, 0.0, 0.0));
        for _ in 0..(1.0 / dt) as usize {
            let (a, b) = (st.wiener(0.5 * dt), st.wiener(0.5 * dt));
            fine = step_l1k2_x(fine, eta, 0.5 * dt, a);
            fine.clamp(1e-2);
            fine = step_l1k2_x(fine, eta, 0.5 * dt, b);
            fine.clamp(1e-2);
            coarse = step_l1k2_x(coarse, eta, dt, a + b);
            coarse.clamp(1e-2);
        }
        (coarse.zsq, fine.zsq)
    })
    .unwrap();
    let coarse = mean(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let fine = mean(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    assert!((coarse.0 - fine.0).abs() < fine.1, "{coarse:?} vs {fine:?}");
}
