//! Reference integrator for the full conditional master equation
//!
//! ```text
//! dϱ = −i[H, ϱ]dt + Σ_l D[ĉ_l]ϱ dt + 𝓗[dV†ĉ]ϱ,
//! 𝓗[A]ϱ = Aϱ + ϱA† − Tr(Aϱ + ϱA†)ϱ,   dV†ĉ = Σ_l dV_l* ĉ_l,
//! ```
//!
//! It is slow compared with the scenario steppers, which it checks.
//!
//! Each step is taken in Kraus form: with the measured record
//! `dY = dV + ⟨Θĉ + Υĉ^‡⟩dt` and
//!
//! ```text
//! M = I − (iH + ½Σĉ†ĉ)dt + Σ_l dY_l* ĉ_l,
//! ϱ' ∝ MϱM† + Σ_l (1 − η_l) ĉ_l ϱ ĉ_l† dt,
//! ```
//!
//! followed by hermitization and division by the trace. Expanding the
//! normalization reproduces the Euler–Maruyama increment of the equation
//! above to first order (same drift and diffusion), while the map stays
//! completely positive: states never leave the Bloch ball and, at unit
//! efficiency, pure states stay pure to rounding.

use num_complex::Complex64;

use super::{Op, SimConfig};
use crate::error::{Error, Result};
use crate::noise::{IncrementSampler, NoiseStream};
use crate::unravel::UnravelingMatrix;

const STATE_TOL: f64 = 1e-10;

fn hermitian_part(m: &Op) -> Op {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn max_abs(m: &Op) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Check that `rho` is a density matrix within `1e-10`.
pub fn validate_density(rho: &Op) -> Result<()> {
    if max_abs(&(rho - rho.adjoint())) > STATE_TOL {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("density matrix has trace {tr}")));
    }
    // For a unit-trace 2×2 Hermitian matrix the eigenvalues are (1 ± |r|)/2.
    let r = super::BlochState::from_density(rho).norm();
    if (1.0 - r) / 2.0 < -STATE_TOL {
        return Err(Error::InvalidState(format!("density matrix has eigenvalue {}", (1.0 - r) / 2.0)));
    }
    Ok(())
}

/// Pre-assembled operators for repeated stepping at a fixed `dt`.
#[derive(Debug, Clone)]
pub struct GenericSme {
    lindblads: Vec<Op>,
    hamiltonian: Op,
    decay: Op,
    theta: Vec<f64>,
    upsilon: Vec<Vec<Complex64>>,
    sampler: IncrementSampler,
    dt: f64,
}

impl GenericSme {
    pub fn new(lindblads: &[Op], hamiltonian: &Op, u: &UnravelingMatrix, dt: f64) -> Result<Self> {
        if lindblads.len() != u.channels() {
            return Err(Error::DimensionMismatch {
                expected: u.channels(),
                got: lindblads.len(),
            });
        }
        if max_abs(&(hamiltonian - hamiltonian.adjoint())) > STATE_TOL {
            return Err(Error::InvalidParameter("Hamiltonian is not Hermitian".into()));
        }
        let decay = lindblads.iter().fold(Op::zeros(), |acc, c| acc + c.adjoint() * c);
        let l = u.channels();
        Ok(GenericSme {
            lindblads: lindblads.to_vec(),
            hamiltonian: *hamiltonian,
            decay,
            theta: u.theta().to_vec(),
            upsilon: (0..l).map(|i| (0..l).map(|j| u.upsilon()[(i, j)]).collect()).collect(),
            sampler: IncrementSampler::new(u, dt)?,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lindblads(&self) -> &[Op] {
        &self.lindblads
    }

    pub fn sample(&self, stream: &mut NoiseStream) -> Vec<Complex64> {
        self.sampler.sample(stream).0
    }

    /// Conditional mean of the record, `⟨Θĉ + Υĉ^‡⟩`.
    pub fn record_mean(&self, rho: &Op) -> Vec<Complex64> {
        let means: Vec<Complex64> = self.lindblads.iter().map(|c| (c * rho).trace()).collect();
        (0..means.len())
            .map(|l| {
                let mixed: Complex64 = self.upsilon[l].iter().zip(&means).map(|(u, m)| u * m.conj()).sum();
                means[l] * self.theta[l] + mixed
            })
            .collect()
    }

    /// One step driven by the innovation increment `dv`.
    pub fn step(&self, rho: &Op, dv: &[Complex64]) -> Op {
        let i = Complex64::new(0.0, 1.0);
        let half = Complex64::new(0.5, 0.0);
        let dt = Complex64::new(self.dt, 0.0);
        let mean = self.record_mean(rho);
        let mut m = Op::identity() - (self.hamiltonian * i + self.decay * half) * dt;
        for ((c, v), mu) in self.lindblads.iter().zip(dv).zip(&mean) {
            m += c * (v + mu * self.dt).conj();
        }
        let mut next = m * rho * m.adjoint();
        for (c, eta) in self.lindblads.iter().zip(&self.theta) {
            next += c * rho * c.adjoint() * Complex64::new((1.0 - eta) * self.dt, 0.0);
        }
        let next = hermitian_part(&next);
        next / next.trace()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Op>,
}

/// Integrate one trajectory on `[0, cfg.t_final]`, recording every `stride`
/// steps (and at `t = 0`).
pub fn integrate_generic(
    lindblads: &[Op],
    hamiltonian: &Op,
    u: &UnravelingMatrix,
    rho0: &Op,
    cfg: &SimConfig,
    stream: &mut NoiseStream,
    stride: usize,
) -> Result<DensityTrajectory> {
    validate_density(rho0)?;
    if !(cfg.dt > 0.0) || !(cfg.t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad time grid dt={} t_final={}", cfg.dt, cfg.t_final)));
    }
    let stride = stride.max(1);
    let sme = GenericSme::new(lindblads, hamiltonian, u, cfg.dt)?;
    let n = cfg.steps_to(cfg.t_final);
    let mut out = DensityTrajectory {
        times: vec![0.0],
        states: vec![*rho0],
    };
    let mut rho = *rho0;
    for step in 1..=n {
        let dv = sme.sample(stream);
        rho = sme.step(&rho, &dv);
        if step % stride == 0 {
            out.times.push(step as f64 * cfg.dt);
            out.states.push(rho);
        }
    }
    Ok(out)
}
