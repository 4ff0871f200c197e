//! Exact geometric decision for a single channel.
//!
//! With `η_0 = 1`, `U(1, υ_0) − U(η_k, υ_k)` is PSD iff `|υ_0 − υ_k| ≤ 1 − η_k`
//! and `U(1, υ_0)` itself iff `|υ_0| ≤ 1`. The smallest eigenvalue of the block
//! `U(η, υ)` is `(η − |υ|)/2`, so
//!
//! ```text
//! max_x λ_min(F(x)) = −½ min_υ g(υ),   g(υ) = max( |υ| − 1, max_k |υ − υ_k| − (1 − η_k) )
//! ```
//!
//! `g` is convex; it is minimized by nested ternary search over the plane.

use num_complex::Complex64;

use super::{FeasibilityProblem, FeasibilityResult, FeasibilityStatus};
use crate::error::{Error, Result};

const SEARCH_HALF_WIDTH: f64 = 3.0;
const TERNARY_ROUNDS: usize = 120;
/// Tolerance on `−½ min g` used to classify the oracle's optimum.
pub const ORACLE_TOL: f64 = 1e-12;

struct Disks {
    centers: Vec<Complex64>,
    radii: Vec<f64>,
}

impl Disks {
    fn gap(&self, v: Complex64) -> f64 {
        let mut g = v.norm() - 1.0;
        for (c, r) in self.centers.iter().zip(&self.radii) {
            g = g.max((v - c).norm() - r);
        }
        g
    }
}

fn ternary(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..TERNARY_ROUNDS {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let arg = 0.5 * (lo + hi);
    (arg, f(arg))
}

/// Exact single-channel feasibility, independent of the LMI machinery.
pub fn disk_oracle_l1(problem: &FeasibilityProblem) -> Result<FeasibilityResult> {
    if problem.channels() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the disk oracle needs L = 1, got L = {}",
            problem.channels()
        )));
    }
    let disks = Disks {
        centers: problem.unravelings().iter().map(|u| u.upsilon()[(0, 0)]).collect(),
        radii: problem.unravelings().iter().map(|u| 1.0 - u.theta()[0]).collect(),
    };
    let inner = |re: f64| {
        ternary(-SEARCH_HALF_WIDTH, SEARCH_HALF_WIDTH, |im| disks.gap(Complex64::new(re, im)))
    };
    let (re, _) = ternary(-SEARCH_HALF_WIDTH, SEARCH_HALF_WIDTH, |re| inner(re).1);
    let (im, g) = inner(re);
    let optimum = -0.5 * g;
    let status = FeasibilityStatus::from_optimum(optimum, ORACLE_TOL);
    Ok(FeasibilityResult::with_certificate(status, 1, vec![re, im], optimum, Some(optimum), 0))
}
