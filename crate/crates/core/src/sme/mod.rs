//! Conditional qubit dynamics under diffusive monitoring.
//!
//! [`generic`] integrates the full stochastic master equation for a 2×2
//! density matrix and serves as the reference. The scenario modules hold
//! the reduced Bloch-vector and polar steppers used for production runs:
//!
//! * [`m3k3`]: three Pauli dephasing channels, one informative quadrature per setting;
//! * [`l1k2`]: σ₃ dephasing watched by X- (information) or Y- (noise) homodyne;
//! * [`l2k2`]: decay and excitation channels `σ₋`, `σ₊` watched by X/Y homodyne.
//!
//! Time is measured in units of `1/γ` (`1/γ₋` for the two-channel case).

pub mod ensemble;
pub mod generic;
pub mod l1k2;
pub mod l2k2;
pub mod m3k3;
pub mod photocurrent;
pub mod scenario;

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unravel::{build_unraveling, UnravelingMatrix};

pub use ensemble::{advance_bloch, run_ensemble, StepStats};
pub use generic::{integrate_generic, GenericSme};
pub use l1k2::{analytic_l1k2_y, step_l1k2_x};
pub use l2k2::{step_l2k2, step_l2k2_small_r};
pub use m3k3::{step_m3k3, step_m3k3_polar};
pub use photocurrent::photocurrent_sample;

pub type Op = Matrix2<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity() -> Op {
    Op::identity()
}

pub fn sigma_x() -> Op {
    Op::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_y() -> Op {
    Op::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> Op {
    Op::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// Lowering operator `(σ₁ − iσ₂)/2`, taking `z = +1` to `z = −1`.
pub fn sigma_minus() -> Op {
    Op::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_plus() -> Op {
    sigma_minus().adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochState { x, y, z }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn component(&self, axis: usize) -> f64 {
        match axis {
            1 => self.x,
            2 => self.y,
            3 => self.z,
            _ => panic!("Bloch axis must be 1, 2 or 3, got {axis}"),
        }
    }

    pub fn from_density(rho: &Op) -> Self {
        BlochState {
            x: 2.0 * rho[(0, 1)].re,
            y: -2.0 * rho[(0, 1)].im,
            z: (rho[(0, 0)] - rho[(1, 1)]).re,
        }
    }

    /// `(I + xσ₁ + yσ₂ + zσ₃)/2`.
    pub fn to_density(&self) -> Op {
        (identity() + sigma_x() * c(self.x, 0.0) + sigma_y() * c(self.y, 0.0) + sigma_z() * c(self.z, 0.0))
            * c(0.5, 0.0)
    }

    /// Pull the vector back radially onto `‖r‖ ≤ limit`.
    pub fn clamp_norm(&mut self, limit: f64) -> bool {
        let n = self.norm();
        if n > limit {
            let s = limit / n;
            self.x *= s;
            self.y *= s;
            self.z *= s;
            true
        } else {
            false
        }
    }
}

/// Polar coordinates around the informative axis `k`:
/// `⟨σ_m⟩ + i⟨σ_n⟩ = √β e^{iθ}` and `zsq = ⟨σ_k⟩²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarState {
    pub beta: f64,
    pub theta: f64,
    pub zsq: f64,
}

impl PolarState {
    pub fn new(beta: f64, theta: f64, zsq: f64) -> Self {
        PolarState { beta, theta, zsq }
    }

    /// Polar form of `r` with `k` the informative axis; the remaining two
    /// axes follow cyclically.
    pub fn from_bloch(r: &BlochState, k: usize) -> Self {
        let (m, n, kk) = match k {
            1 => (r.y, r.z, r.x),
            2 => (r.z, r.x, r.y),
            _ => (r.x, r.y, r.z),
        };
        PolarState {
            beta: m * m + n * n,
            theta: n.atan2(m),
            zsq: kk * kk,
        }
    }

    /// Clamp `β` and `zsq` into `[0, 1 + tol]`; true if anything moved.
    pub fn clamp(&mut self, tol: f64) -> bool {
        let hi = 1.0 + tol;
        let before = (self.beta, self.zsq);
        self.beta = self.beta.clamp(0.0, hi);
        self.zsq = self.zsq.clamp(0.0, hi);
        before != (self.beta, self.zsq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Three Pauli channels, three settings.
    M3k3,
    /// One σ₃ channel, X/Y homodyne.
    L1k2,
    /// Decay plus excitation, X/Y homodyne.
    L2k2,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::M3k3 => "m3k3",
            Scenario::L1k2 => "l1k2",
            Scenario::L2k2 => "l2k2",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m3k3" => Ok(Scenario::M3k3),
            "l1k2" => Ok(Scenario::L1k2),
            "l2k2" => Ok(Scenario::L2k2),
            other => Err(Error::InvalidParameter(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Measurement setting: the informative Pauli axis for [`Scenario::M3k3`],
/// the homodyne quadrature otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    Axis(usize),
    X,
    Y,
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Setting::X),
            "y" => Ok(Setting::Y),
            "1" => Ok(Setting::Axis(1)),
            "2" => Ok(Setting::Axis(2)),
            "3" => Ok(Setting::Axis(3)),
            other => Err(Error::InvalidParameter(format!("unknown setting '{other}'"))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Axis(k) => write!(f, "{k}"),
            Setting::X => f.write_str("x"),
            Setting::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    pub eta: f64,
    pub setting: Setting,
    /// Rate setting the time unit (`γ₋` for the two-channel case).
    pub gamma: f64,
    /// `R = γ₊/γ₋`, two-channel case only.
    pub ratio_r: f64,
}

impl ScenarioParams {
    pub fn m3k3(eta: f64, k: usize) -> Result<Self> {
        Self {
            scenario: Scenario::M3k3,
            eta,
            setting: Setting::Axis(k),
            gamma: 1.0,
            ratio_r: 0.0,
        }
        .validated()
    }

    pub fn l1k2(eta: f64, setting: Setting) -> Result<Self> {
        Self {
            scenario: Scenario::L1k2,
            eta,
            setting,
            gamma: 1.0,
            ratio_r: 0.0,
        }
        .validated()
    }

    pub fn l2k2(eta: f64, ratio_r: f64, setting: Setting) -> Result<Self> {
        Self {
            scenario: Scenario::L2k2,
            eta,
            setting,
            gamma: 1.0,
            ratio_r,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::EfficiencyOutOfRange {
                channel: 0,
                value: self.eta,
            });
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.ratio_r >= 0.0) {
            return Err(Error::InvalidParameter(format!("R must be non-negative, got {}", self.ratio_r)));
        }
        let ok = match (self.scenario, self.setting) {
            (Scenario::M3k3, Setting::Axis(k)) => (1..=3).contains(&k),
            (Scenario::L1k2 | Scenario::L2k2, Setting::X | Setting::Y) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "setting {} does not apply to scenario {}",
                self.setting, self.scenario
            )));
        }
        Ok(self)
    }

    pub fn gamma_minus(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_plus(&self) -> f64 {
        self.ratio_r * self.gamma
    }

    /// Lindblad operators `ĉ`, rates included.
    pub fn lindblads(&self) -> Vec<Op> {
        let s = |rate: f64| c(rate.sqrt(), 0.0);
        match self.scenario {
            Scenario::M3k3 => vec![sigma_x() * s(self.gamma), sigma_y() * s(self.gamma), sigma_z() * s(self.gamma)],
            Scenario::L1k2 => vec![sigma_z() * s(self.gamma)],
            Scenario::L2k2 => vec![sigma_minus() * s(self.gamma_minus()), sigma_plus() * s(self.gamma_plus())],
        }
    }

    pub fn hamiltonian(&self) -> Op {
        Op::zeros()
    }

    /// `Θ = ηI` and the setting's `Υ`.
    pub fn unraveling(&self) -> UnravelingMatrix {
        let eta = self.eta;
        let diag: Vec<f64> = match (self.scenario, self.setting) {
            (Scenario::M3k3, Setting::Axis(k)) => (1..=3).map(|l| if l == k { eta } else { -eta }).collect(),
            (Scenario::L1k2, Setting::X) => vec![eta],
            (Scenario::L1k2, Setting::Y) => vec![-eta],
            (Scenario::L2k2, Setting::X) => vec![eta, eta],
            (Scenario::L2k2, Setting::Y) => vec![-eta, -eta],
            _ => unreachable!("validated on construction"),
        };
        let l = diag.len();
        let ups = nalgebra::DMatrix::from_fn(l, l, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) });
        build_unraveling(&vec![eta; l], &ups).expect("dyne unravelings are valid")
    }

    /// Pure `x = 1` start for the dephasing scenarios, ground state for decay.
    pub fn initial_state(&self) -> BlochState {
        match self.scenario {
            Scenario::M3k3 | Scenario::L1k2 => BlochState::new(1.0, 0.0, 0.0),
            Scenario::L2k2 => BlochState::new(0.0, 0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steady-state samples are drawn uniformly from `[burn_in, t_final]`.
    pub burn_in: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool. Never affects results.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_final: 15.0,
            burn_in: 10.0,
            n_traj: 10_000,
            seed: 0,
            workers: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(Error::InvalidParameter(format!("dt must lie in (0, 1e-2], got {}", self.dt)));
        }
        if !(self.burn_in < self.t_final) {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be smaller than t_final ({})",
                self.burn_in, self.t_final
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be positive".into()));
        }
        Ok(())
    }

    /// Norm slack allowed after a step, `10·dt`.
    pub fn norm_tol(&self) -> f64 {
        10.0 * self.dt
    }

    pub fn steps_to(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}
