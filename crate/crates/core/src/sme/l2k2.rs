//! Decay and excitation channels `√γ₋σ₋`, `√γ₊σ₊` with both channels
//! homodyned in the same quadrature.
//!
//! Under X-homodyne the Bloch vector stays in the x–z plane once it starts
//! there; Y-homodyne is the same system in the y–z plane with the sign of
//! the decay-channel noise reversed.

use super::{BlochState, Setting};

/// One Euler–Maruyama step. `dw = [dW₋, dW₊]`; the in-plane coordinate is
/// `x` for [`Setting::X`] and `y` for [`Setting::Y`], the other one is left alone.
pub fn step_l2k2(
    state: BlochState,
    setting: Setting,
    eta: f64,
    gamma_minus: f64,
    r: f64,
    dt: f64,
    dw: &[f64; 2],
) -> BlochState {
    let gamma_plus = r * gamma_minus;
    let sum = gamma_plus + gamma_minus;
    let delta = gamma_plus - gamma_minus;
    let (a, wm) = match setting {
        Setting::Y => (state.y, -dw[0]),
        _ => (state.x, dw[0]),
    };
    let wp = dw[1];
    let z = state.z;
    let sm = (eta * gamma_minus).sqrt();
    let sp = (eta * gamma_plus).sqrt();
    let na = a - 0.5 * sum * a * dt + sm * (1.0 + z - a * a) * wm + sp * (1.0 - z - a * a) * wp;
    let nz = z + (delta - sum * z) * dt - sm * a * (1.0 + z) * wm + sp * a * (1.0 - z) * wp;
    match setting {
        Setting::Y => BlochState::new(state.x, na, nz),
        _ => BlochState::new(na, state.y, nz),
    }
}

/// Leading-order dynamics for `R ≪ 1`, where `x = O(√R)` and `z ≈ −1`;
/// only the excitation noise `dW₊` drives the state. Milstein in `z`
/// (the `x` noise is additive).
pub fn step_l2k2_small_r(state: (f64, f64), eta: f64, gamma: f64, r: f64, dt: f64, dw_plus: f64) -> (f64, f64) {
    let (x, z) = state;
    let s = 2.0 * (eta * gamma * r).sqrt();
    let nx = x - 0.5 * gamma * x * dt + s * dw_plus;
    let nz = z + gamma * (2.0 * r - z - 1.0) * dt + s * x * dw_plus + 0.5 * s * s * (dw_plus * dw_plus - dt);
    (nx, nz)
}
