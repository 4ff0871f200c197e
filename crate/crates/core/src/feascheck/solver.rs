//! Ascent on `λ_min(F(x))` with a certified upper bound.
//!
//! `λ_min(F(x))` is concave but nonsmooth. Each restart maximizes the
//! entropic smoothing
//!
//! ```text
//! f_μ(x) = −μ log Σ_i exp(−λ_i(x)/μ)         (all eigenvalues of all blocks)
//! ```
//!
//! by BFGS ascent, driving `μ` from `1e-1` down to `1e-11`. The softmin
//! weights `w_i` define `Z = Σ w_i v_i v_iᵀ ⪰ 0` with unit trace, which is a
//! dual point: for every `y`,
//!
//! ```text
//! λ_min(F(y)) ≤ ⟨Z, F(y)⟩ = Σ w_i λ_i(x) + g·(y − x),   g_j = ⟨Z, F^j⟩.
//! ```
//!
//! Any `y` with `λ_min(F(y)) ≥ −tol` has `‖y‖ ≤ √L (1 + 2 tol)` (from the
//! first block), so `Σ w_i λ_i + ‖g‖ (√L (1 + 2 tol) + ‖x‖) < −tol` certifies
//! infeasibility.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    disk_oracle_l1, norm, spade_basis, to_dvec, FeasibilityProblem, FeasibilityResult,
    FeasibilityStatus, SpadeBasis,
};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol_feas: f64,
    /// Iteration budget per restart.
    pub max_iter: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Worker threads for the restarts; 0 uses the global rayon pool.
    pub workers: usize,
    /// For `L = 1`, answer with the exact geometric decision instead.
    pub exact_l1: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: 1e-9,
            max_iter: 20_000,
            seed: 0,
            restarts: 8,
            workers: 0,
            exact_l1: false,
        }
    }
}

const MU_SCHEDULE: [f64; 11] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11];
const STAGE_CAP: usize = 400;
const ARMIJO: f64 = 1e-4;

struct Eval {
    lambda_min: f64,
    value: f64,
    grad: Vec<f64>,
    /// `Σ w_i λ_i = ⟨Z, F(x)⟩`.
    mean: f64,
}

struct Context<'a> {
    problem: &'a FeasibilityProblem,
    basis: std::sync::Arc<SpadeBasis>,
    radius: f64,
    tol: f64,
}

impl Context<'_> {
    fn evaluate(&self, x: &[f64], mu: f64) -> Eval {
        let blocks = self.problem.blocks(x).expect("iterate has L(L+1) entries");
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(blocks.len() * blocks[0].nrows());
        for b in blocks {
            let eig = SymmetricEigen::new(b);
            for (i, &val) in eig.eigenvalues.iter().enumerate() {
                pairs.push((val, eig.eigenvectors.column(i).iter().copied().collect()));
            }
        }
        let lambda_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        let mut mean = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (val, vec) in &pairs {
            let w = (-(val - lambda_min) / mu).exp();
            if w < 1e-300 {
                continue;
            }
            z += w;
            mean += w * val;
            for (g, q) in grad.iter_mut().zip(self.basis.quadratic_forms(vec)) {
                *g += w * q;
            }
        }
        for g in &mut grad {
            *g /= z;
        }
        Eval {
            lambda_min,
            value: lambda_min - mu * z.ln(),
            grad,
            mean: mean / z,
        }
    }

    fn bound(&self, x: &[f64], e: &Eval) -> f64 {
        e.mean + norm(&e.grad) * (self.radius + norm(x))
    }
}

struct Outcome {
    best_x: Vec<f64>,
    best_lambda: f64,
    best_bound: f64,
    iterations: usize,
}

struct Tracker {
    best_x: Vec<f64>,
    best_lambda: f64,
    best_bound: f64,
}

impl Tracker {
    fn record(&mut self, ctx: &Context<'_>, x: &[f64], e: &Eval) {
        if e.lambda_min > self.best_lambda {
            self.best_lambda = e.lambda_min;
            self.best_x = x.to_vec();
        }
        self.best_bound = self.best_bound.min(ctx.bound(x, e));
    }

    fn settled(&self, tol: f64) -> bool {
        self.best_lambda > tol || self.best_bound < -tol
    }
}

fn run_restart(ctx: &Context<'_>, x0: Vec<f64>, max_iter: usize) -> Outcome {
    let n = x0.len();
    let mut x = x0;
    let mut iterations = 0;
    let mut tracker = Tracker {
        best_x: x.clone(),
        best_lambda: f64::NEG_INFINITY,
        best_bound: f64::INFINITY,
    };

    'stages: for &mu in &MU_SCHEDULE {
        let mut e = ctx.evaluate(&x, mu);
        tracker.record(ctx, &x, &e);
        // Inverse-Hessian estimate of −f_μ.
        let mut h = DMatrix::<f64>::identity(n, n);
        let mut fresh = true;
        for _ in 0..STAGE_CAP {
            if tracker.settled(ctx.tol) || iterations >= max_iter {
                break 'stages;
            }
            let g = to_dvec(&e.grad);
            if norm(&e.grad) * (ctx.radius + norm(&x)) < 1e-3 * mu {
                break;
            }
            let mut d = &h * &g;
            let mut slope = g.dot(&d);
            if slope <= 0.0 {
                h = DMatrix::identity(n, n);
                d = g.clone();
                slope = g.dot(&d);
            }
            let mut step = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
                let te = ctx.evaluate(&trial, mu);
                if te.value >= e.value + ARMIJO * step * slope {
                    break Some((trial, te));
                }
                step *= 0.5;
                if step < 1e-20 {
                    break None;
                }
            };
            iterations += 1;
            let Some((x_new, e_new)) = accepted else {
                break;
            };
            let s = DVector::from_iterator(n, x_new.iter().zip(&x).map(|(a, b)| a - b));
            // Gradient change of the minimized function −f_μ.
            let y = DVector::from_iterator(n, e.grad.iter().zip(&e_new.grad).map(|(a, b)| a - b));
            let sy = s.dot(&y);
            if sy > 1e-18 * s.norm() * y.norm() && sy > 0.0 {
                if fresh {
                    h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                    fresh = false;
                }
                let rho = 1.0 / sy;
                let hy = &h * &y;
                let yhy = y.dot(&hy);
                h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                    - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            }
            x = x_new;
            e = e_new;
            tracker.record(ctx, &x, &e);
        }
    }

    Outcome {
        best_x: tracker.best_x,
        best_lambda: tracker.best_lambda,
        best_bound: tracker.best_bound,
        iterations,
    }
}

fn start_point(n: usize, seed: u64, restart: usize) -> Vec<f64> {
    if restart == 0 {
        // Quantum state diffusion, Υ_0 = 0.
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
    (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
}

/// Decide whether `F(x) ⪰ 0` has a solution.
///
/// The outcome is a deterministic function of the problem and `opts.seed`;
/// the number of worker threads does not change it.
pub fn solve_feasibility(problem: &FeasibilityProblem, opts: &SolverOptions) -> Result<FeasibilityResult> {
    let l = problem.channels();
    if opts.exact_l1 && l == 1 {
        return disk_oracle_l1(problem);
    }
    let ctx = Context {
        problem,
        basis: spade_basis(l),
        radius: (l as f64).sqrt() * (1.0 + 2.0 * opts.tol_feas),
        tol: opts.tol_feas,
    };
    let n = problem.n_vars();
    let restarts = opts.restarts.max(1);
    let run = || -> Vec<Outcome> {
        (0..restarts)
            .into_par_iter()
            .map(|r| run_restart(&ctx, start_point(n, opts.seed, r), opts.max_iter))
            .collect()
    };
    let outcomes = if opts.workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    } else {
        run()
    };

    // Best by (λ_min, restart index): strict `>` keeps the earliest restart on ties.
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.best_lambda > outcomes[best].best_lambda {
            best = i;
        }
    }
    let bound = outcomes.iter().map(|o| o.best_bound).fold(f64::INFINITY, f64::min);
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let winner = &outcomes[best];
    let tol = opts.tol_feas;
    let status = if winner.best_lambda >= -tol {
        FeasibilityStatus::from_optimum(winner.best_lambda, tol)
    } else if bound < -tol {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Undecided
    };
    Ok(FeasibilityResult::with_certificate(
        status,
        l,
        winner.best_x.clone(),
        winner.best_lambda,
        Some(bound),
        iterations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feascheck::assemble_f;
    use crate::linalg::min_eigenvalue;
    use crate::unravel::{build_unraveling, dyne_unraveling, UnravelingMatrix};
    use num_complex::Complex64;

    fn scalar(eta: f64, re: f64, im: f64) -> UnravelingMatrix {
        UnravelingMatrix::scalar(eta, Complex64::new(re, im)).unwrap()
    }

    fn solve(us: Vec<UnravelingMatrix>) -> FeasibilityResult {
        let p = FeasibilityProblem::new(us).unwrap();
        solve_feasibility(&p, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn opposite_strong_homodynes_are_infeasible() {
        let r = solve(vec![scalar(0.8, 0.8, 0.0), scalar(0.8, -0.8, 0.0)]);
        assert_eq!(r.status, FeasibilityStatus::Infeasible);
        assert!(r.certificate_x.is_none());
        assert!(r.dual_bound.unwrap() < -1e-9);
    }

    #[test]
    fn half_efficiency_homodynes_touch_at_qsd() {
        let r = solve(vec![scalar(0.5, 0.5, 0.0), scalar(0.5, -0.5, 0.0)]);
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        let x = r.certificate_x.unwrap();
        assert!(norm(&x) < 1e-6, "certificate {x:?}");
    }

    #[test]
    fn single_strong_homodyne_is_feasible_away_from_qsd() {
        let r = solve(vec![scalar(0.8, 0.8, 0.0)]);
        assert!(r.status.is_feasible());
        let p = FeasibilityProblem::new(vec![scalar(0.8, 0.8, 0.0)]).unwrap();
        let check = min_eigenvalue(&assemble_f(r.certificate_x.as_ref().unwrap(), &p).unwrap());
        assert!(check >= -1e-9);
    }

    #[test]
    fn three_channel_scheme_set() {
        // The three σ_k-informative schemes at η = 0.9 have no common fine-graining;
        // at η = 0.5 the quantum-state-diffusion unraveling works.
        let set = |eta: f64| -> Vec<UnravelingMatrix> {
            (0..3)
                .map(|k| {
                    let diag: Vec<Complex64> = (0..3)
                        .map(|l| Complex64::new(if l == k { eta } else { -eta }, 0.0))
                        .collect();
                    let ups = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
                    build_unraveling(&[eta; 3], &ups).unwrap()
                })
                .collect()
        };
        assert_eq!(solve(set(0.9)).status, FeasibilityStatus::Infeasible);
        assert!(solve(set(0.5)).status.is_feasible());
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let p = FeasibilityProblem::new(vec![
            dyne_unraveling(2, 0.7, 0.3).unwrap(),
            dyne_unraveling(2, 0.7, 1.2).unwrap(),
        ])
        .unwrap();
        let a = solve_feasibility(&p, &SolverOptions { workers: 1, seed: 5, ..Default::default() }).unwrap();
        let b = solve_feasibility(&p, &SolverOptions { workers: 4, seed: 5, ..Default::default() }).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.min_eig.to_bits(), b.min_eig.to_bits());
        assert_eq!(a.certificate_x, b.certificate_x);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn exact_l1_option_uses_geometry() {
        let p = FeasibilityProblem::new(vec![scalar(0.8, 0.8, 0.0), scalar(0.8, -0.8, 0.0)]).unwrap();
        let r = solve_feasibility(&p, &SolverOptions { exact_l1: true, ..Default::default() }).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Infeasible);
        assert_eq!(r.iterations, 0);
    }
}
