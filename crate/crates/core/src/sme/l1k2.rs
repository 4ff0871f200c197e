//! Single σ₃ dephasing channel (γ = 1).
//!
//! X-homodyne reads out `⟨σ₃⟩` and localizes the qubit onto a pole; in polar
//! form `(β, zsq)` it is a scalar-noise system and is stepped with Milstein.
//! Y-homodyne carries no information: it rotates the state about σ₃ by a
//! random angle (`dθ = 2√η dW`) while the ensemble dephases, so the reduced
//! variables follow a closed form.

use super::PolarState;

/// Drift of `(β, θ, zsq)` under X-homodyne.
pub fn x_polar_drift(p: &PolarState, eta: f64) -> [f64; 3] {
    [
        4.0 * eta * p.zsq * p.beta - 4.0 * p.beta,
        0.0,
        4.0 * eta * (1.0 - p.zsq).powi(2),
    ]
}

/// Diffusion of `(β, θ, zsq)` under X-homodyne, branch `⟨σ₃⟩ = +√zsq`.
/// The azimuth does not feel the readout noise at all.
pub fn x_polar_diffusion(p: &PolarState, eta: f64) -> [f64; 3] {
    let g = 4.0 * (eta * p.zsq.max(0.0)).sqrt();
    [-g * p.beta, 0.0, g * (1.0 - p.zsq)]
}

/// One scalar Milstein step of `(β, zsq)` under X-homodyne; `θ` is unchanged.
pub fn step_l1k2_x(state: PolarState, eta: f64, dt: f64, dw: f64) -> PolarState {
    let (b, s) = (state.beta.max(0.0), state.zsq.max(0.0));
    let g = 4.0 * (eta * s).sqrt();
    let ito = dw * dw - dt;
    let beta = b + (4.0 * eta * s * b - 4.0 * b) * dt - g * b * dw
        + 0.5 * (16.0 * eta * s * b - 8.0 * eta * b * (1.0 - s)) * ito;
    let zsq = s + 4.0 * eta * (1.0 - s).powi(2) * dt + g * (1.0 - s) * dw
        + 0.5 * 8.0 * eta * (1.0 - s) * (1.0 - 3.0 * s) * ito;
    PolarState::new(beta, state.theta, zsq)
}

/// Ensemble law of the Y-homodyne arm: `β(t) = β₀e^{4(η−1)t}`, `zsq(t) = zsq₀`.
/// The azimuth is a random walk, so the returned `θ` is its mean (zero drift).
pub fn analytic_l1k2_y(beta0: f64, zsq0: f64, eta: f64, t: f64) -> PolarState {
    PolarState::new(beta0 * (4.0 * (eta - 1.0) * t).exp(), 0.0, zsq0)
}

/// `(E[x²], E[y²])` on the Y arm for a start on the x axis with `β(0) = β₀`.
///
/// `β` is deterministic and `θ` diffuses with variance `4ηt`, so
/// `E[cos²θ] = (1 + e^{−8ηt})/2`.
pub fn y_arm_second_moments(beta0: f64, eta: f64, t: f64) -> (f64, f64) {
    let beta = analytic_l1k2_y(beta0, 0.0, eta, t).beta;
    let c = (-8.0 * eta * t).exp();
    (0.5 * beta * (1.0 + c), 0.5 * beta * (1.0 - c))
}
