//! Correlated complex Wiener increments and per-trajectory random streams.
//!
//! Every trajectory owns a [`NoiseStream`] keyed by `(seed, trajectory_index)`.
//! The stream is a ChaCha8 generator whose key comes from `seed` and whose
//! 64-bit stream id is the trajectory index, so streams never overlap and a
//! given key reproduces the same draws no matter how many other streams run
//! alongside it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::unravel::UnravelingMatrix;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    trajectory_index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Wiener increment over `dt`.
    pub fn wiener(&mut self, dt: f64) -> f64 {
        dt.sqrt() * self.normal()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

pub fn make_stream(seed: u64, trajectory_index: u64) -> NoiseStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory_index);
    NoiseStream {
        seed,
        trajectory_index,
        rng,
    }
}

/// `dV` for one step, length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexIncrement(pub Vec<Complex64>);

impl ComplexIncrement {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Precomputed square root of `U_real · dt` for repeated sampling.
///
/// `g = S ξ` with `ξ ~ N(0, I)` has covariance `U_real dt`; the complex
/// increment is `dV = g[..L] + i g[L..]`, which reproduces both
/// `E[dV dV†] = Θ dt` and `E[dV dVᵀ] = Υ dt`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    l: usize,
    factor: DMatrix<f64>,
}

impl IncrementSampler {
    pub fn new(u: &UnravelingMatrix, dt: f64) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !u.is_valid() {
            return Err(Error::NotPsd {
                min_eig: u.real_form().min_eigenvalue(),
            });
        }
        let (vals, vecs) = linalg::sorted_eigen(u.real_form().matrix());
        // Boundary unravelings (every homodyne scheme) have exact zero modes.
        let roots = DVector::from_iterator(vals.len(), vals.iter().map(|v| (v.max(0.0) * dt).sqrt()));
        let factor = vecs * DMatrix::from_diagonal(&roots);
        Ok(IncrementSampler {
            l: u.channels(),
            factor,
        })
    }

    pub fn channels(&self) -> usize {
        self.l
    }

    /// The real `2L` vector `g`.
    pub fn sample_real(&self, stream: &mut NoiseStream) -> Vec<f64> {
        let n = 2 * self.l;
        let xi: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
        (0..n)
            .map(|r| (0..n).map(|c| self.factor[(r, c)] * xi[c]).sum())
            .collect()
    }

    pub fn sample(&self, stream: &mut NoiseStream) -> ComplexIncrement {
        let g = self.sample_real(stream);
        ComplexIncrement((0..self.l).map(|i| Complex64::new(g[i], g[i + self.l])).collect())
    }
}

/// One correlated increment. Loops should build an [`IncrementSampler`] once instead.
pub fn sample_increments(u: &UnravelingMatrix, dt: f64, stream: &mut NoiseStream) -> Result<ComplexIncrement> {
    Ok(IncrementSampler::new(u, dt)?.sample(stream))
}
