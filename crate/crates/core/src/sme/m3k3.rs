//! Three Pauli dephasing channels `ĉ_l = σ_l` (γ = 1) with setting `k`:
//! channel `k` is X-homodyned (information about `σ_k`), the other two are
//! Y-homodyned (pure noise).
//!
//! For `k = 3` the Bloch vector obeys `dr = −4r dt + B dW` with
//!
//! ```text
//!            [  0   −z   −xz  ]
//! B = 2√η ·  [  z    0   −yz  ]
//!            [ −y    x   1−z² ]
//! ```
//!
//! The other settings are cyclic relabelings of the axes. The columns of `B`
//! are the noises of channels `σ₁, σ₂, σ₃`.

use super::{BlochState, PolarState};

/// `(X, Y, Z)` coordinates in the frame where `Z` is the informative axis `k`.
fn to_frame(r: &BlochState, k: usize) -> [f64; 3] {
    match k {
        1 => [r.y, r.z, r.x],
        2 => [r.z, r.x, r.y],
        _ => [r.x, r.y, r.z],
    }
}

/// The diffusion matrix for the `k = 3` setting in frame coordinates.
pub fn diffusion_k3(v: [f64; 3], eta: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = v;
    let s = 2.0 * eta.sqrt();
    [
        [0.0, -s * z, -s * x * z],
        [s * z, 0.0, -s * y * z],
        [-s * y, s * x, s * (1.0 - z * z)],
    ]
}

/// Diffusion matrix for setting `k` in lab coordinates: `B_k[i][j]` is the
/// response of `⟨σ_i⟩` to the noise of channel `σ_j`.
pub fn diffusion(r: &BlochState, k: usize, eta: f64) -> [[f64; 3]; 3] {
    let frame_b = diffusion_k3(to_frame(r, k), eta);
    // Lab index of frame axis a.
    let lab = |a: usize| match k {
        1 => [1, 2, 0][a],
        2 => [2, 0, 1][a],
        _ => a,
    };
    let mut b = [[0.0; 3]; 3];
    for a in 0..3 {
        for c in 0..3 {
            b[lab(a)][lab(c)] = frame_b[a][c];
        }
    }
    b
}

/// One Euler–Maruyama step. `dw[j]` is the Wiener increment of channel `σ_{j+1}`.
pub fn step_m3k3(state: BlochState, k: usize, eta: f64, dt: f64, dw: &[f64; 3]) -> BlochState {
    let b = diffusion(&state, k, eta);
    let r = [state.x, state.y, state.z];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i] * (1.0 - 4.0 * dt) + b[i][0] * dw[0] + b[i][1] * dw[1] + b[i][2] * dw[2];
    }
    BlochState::new(out[0], out[1], out[2])
}

/// Drift of `(β, θ, zsq)`.
pub fn polar_drift(p: &PolarState, eta: f64) -> [f64; 3] {
    let (b, s) = (p.beta, p.zsq);
    [
        8.0 * eta * s + 4.0 * eta * b * s - 8.0 * b,
        0.0,
        4.0 * eta * b + 4.0 * eta * (1.0 - s).powi(2) - 8.0 * s,
    ]
}

/// Diffusion of `(β, θ, zsq)` against the three channel noises, on the
/// branch `⟨σ_k⟩ = +√zsq`. `β` is floored before it divides anything.
pub fn polar_diffusion(p: &PolarState, eta: f64) -> [[f64; 3]; 3] {
    let beta = p.beta.max(0.0);
    let sq = p.zsq.max(0.0).sqrt();
    let rb = beta.sqrt();
    let floored = beta.max(1e-15).sqrt();
    let (sin, cos) = p.theta.sin_cos();
    let g = 4.0 * eta.sqrt() * sq;
    [
        [g * rb * sin, -g * rb * cos, -g * beta],
        [0.5 * g * cos / floored, 0.5 * g * sin / floored, 0.0],
        [-g * rb * sin, g * rb * cos, g * (1.0 - p.zsq)],
    ]
}

/// One Milstein step of `(β, zsq)`; `θ` is carried unchanged.
///
/// The in-plane noises combine into `dW_a = sin θ dW₁ − cos θ dW₂`. With the
/// two driving noises `(dW_a, dW₃)` the system is not commutative; the mixed
/// iterated integrals are replaced by their symmetric part `½ΔW_aΔW₃`, which
/// keeps the boundary behaviour of the one-noise Milstein terms without Lévy
/// areas. The result is not clamped; see [`PolarState::clamp`].
pub fn step_m3k3_polar(state: PolarState, eta: f64, dt: f64, dw: &[f64; 3]) -> PolarState {
    let (b, s) = (state.beta.max(0.0), state.zsq.max(0.0));
    let (sin, cos) = state.theta.sin_cos();
    let wa = sin * dw[0] - cos * dw[1];
    let w3 = dw[2];
    let re = eta.sqrt();
    let (rb, rs) = (b.sqrt(), s.sqrt());

    let b1 = [4.0 * re * rb * rs, -4.0 * re * rb * rs];
    let b2 = [-4.0 * re * b * rs, 4.0 * re * (1.0 - s) * rs];
    let l1b1 = [8.0 * eta * (s - b), 8.0 * eta * (b - s)];
    let l2b2 = [16.0 * eta * b * s - 8.0 * eta * b * (1.0 - s), 8.0 * eta * (1.0 - s) * (1.0 - 3.0 * s)];
    let l1b2 = [-16.0 * eta * s * rb + 8.0 * eta * b * rb, -8.0 * eta * rb * (1.0 - 3.0 * s)];
    let l2b1 = [8.0 * eta * rb * (1.0 - 2.0 * s), -8.0 * eta * rb * (1.0 - 2.0 * s)];

    let a = polar_drift(&state, eta);
    let drift = [a[0], a[2]];
    let mut next = [b, s];
    for i in 0..2 {
        next[i] += drift[i] * dt
            + b1[i] * wa
            + b2[i] * w3
            + 0.5 * l1b1[i] * (wa * wa - dt)
            + 0.5 * l2b2[i] * (w3 * w3 - dt)
            + 0.5 * (l1b2[i] + l2b1[i]) * wa * w3;
    }
    PolarState::new(next[0], state.theta, next[1])
}
