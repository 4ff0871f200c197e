//! Measured output `J dt = ⟨Θĉ + Υĉ^‡⟩dt + dV`, where `ĉ^‡` is the column of
//! adjoint Lindblad operators.

use num_complex::Complex64;

use super::{BlochState, ScenarioParams};
use crate::error::{Error, Result};
use crate::noise::ComplexIncrement;

pub fn photocurrent_sample(
    state: &BlochState,
    params: &ScenarioParams,
    dv: &ComplexIncrement,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let ops = params.lindblads();
    if dv.len() != ops.len() {
        return Err(Error::DimensionMismatch {
            expected: ops.len(),
            got: dv.len(),
        });
    }
    let rho = state.to_density();
    let mean_c: Vec<Complex64> = ops.iter().map(|c| (c * rho).trace()).collect();
    let u = params.unraveling();
    let (theta, ups) = (u.theta(), u.upsilon());
    Ok((0..ops.len())
        .map(|l| {
            let mut m = mean_c[l] * theta[l];
            for (k, ck) in mean_c.iter().enumerate() {
                m += ups[(l, k)] * ck.conj();
            }
            m * dt + dv.0[l]
        })
        .collect())
}
