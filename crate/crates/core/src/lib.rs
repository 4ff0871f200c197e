//! Common fine-graining of diffusive unravelings and monitored-qubit steering.
//!
//! * [`unravel`]: unraveling matrices `U(Θ, Υ)` and the coarse-graining order;
//! * [`feascheck`]: does a pure-state fine-graining `U(I, Υ₀)` dominate a set of unravelings?
//! * [`noise`]: reproducible correlated complex Wiener increments;
//! * [`sme`]: stochastic master equation integrators for three monitoring scenarios;
//! * [`steering`]: ensemble estimators of the steering parameter and critical efficiencies.

pub mod error;
pub mod feascheck;
pub mod linalg;
pub mod noise;
pub mod sme;
pub mod steering;
pub mod unravel;

pub use error::{Error, Result};
