//! Existence of a common pure-state fine-graining for a set of unravelings.
//!
//! Given `U_1 … U_K`, we look for `Υ_0` such that `U(I, Υ_0) ⪰ 0` and
//! `U(I, Υ_0) − U_k ⪰ 0` for every `k`. Writing `Υ_0 = heart_map(x)` for a
//! real vector `x` of length `L(L+1)` turns this into the linear matrix
//! inequality `F(x) ⪰ 0` with
//!
//! ```text
//! F(x) = blockdiag( ♠(x), ♠(x) − U_1, …, ♠(x) − U_K ),   ♠(x) = U(I, heart_map(x))
//! ```
//!
//! If a feasible `x` exists, every member of the set is a coarse graining of
//! one purity-preserving unraveling and the set cannot demonstrate detector
//! dependence.

mod oracle;
mod solver;

pub use oracle::disk_oracle_l1;
pub use solver::{solve_feasibility, SolverOptions};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::unravel::{RealUForm, UnravelingJson, UnravelingMatrix};

#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    l: usize,
    unravelings: Vec<UnravelingMatrix>,
}

impl FeasibilityProblem {
    pub fn new(unravelings: Vec<UnravelingMatrix>) -> Result<Self> {
        let first = unravelings.first().ok_or(Error::EmptyProblem)?;
        let l = first.channels();
        for u in &unravelings {
            if u.channels() != l {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    got: u.channels(),
                });
            }
            if !u.is_valid() {
                return Err(Error::NotPsd {
                    min_eig: u.real_form().min_eigenvalue(),
                });
            }
        }
        Ok(FeasibilityProblem { l, unravelings })
    }

    pub fn channels(&self) -> usize {
        self.l
    }

    pub fn unravelings(&self) -> &[UnravelingMatrix] {
        &self.unravelings
    }

    /// Number of unknowns, `L(L+1)`.
    pub fn n_vars(&self) -> usize {
        self.l * (self.l + 1)
    }

    /// The diagonal blocks of `F(x)`, first block `♠(x)`.
    pub fn blocks(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let spade = spade(self.l, x)?;
        let mut out = Vec::with_capacity(self.unravelings.len() + 1);
        out.push(spade.clone());
        for u in &self.unravelings {
            out.push(&spade - u.real_form().matrix());
        }
        Ok(out)
    }

    /// `λ_min(F(x))`.
    pub fn min_eigenvalue(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .blocks(x)?
            .iter()
            .map(linalg::min_eigenvalue)
            .fold(f64::INFINITY, f64::min))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeasibilityStatus {
    StrictlyFeasible,
    Feasible,
    Infeasible,
    Undecided,
}

impl FeasibilityStatus {
    /// Strictly feasible or feasible: a common fine-graining exists.
    pub fn is_feasible(self) -> bool {
        matches!(self, Self::StrictlyFeasible | Self::Feasible)
    }

    pub fn is_decided(self) -> bool {
        self != Self::Undecided
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrictlyFeasible => "STRICTLY_FEASIBLE",
            Self::Feasible => "FEASIBLE",
            Self::Infeasible => "INFEASIBLE",
            Self::Undecided => "UNDECIDED",
        }
    }

    /// Classify an (upper-bounded) optimum of `λ_min(F)`.
    pub(crate) fn from_optimum(best: f64, tol: f64) -> Self {
        if best > tol {
            Self::StrictlyFeasible
        } else if best >= -tol {
            Self::Feasible
        } else {
            Self::Infeasible
        }
    }
}

impl std::fmt::Display for FeasibilityStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Present for (strictly) feasible outcomes.
    pub certificate_x: Option<Vec<f64>>,
    pub upsilon0: Option<DMatrix<Complex64>>,
    /// Best `λ_min(F(x))` found.
    pub min_eig: f64,
    /// Smallest certified upper bound on `max_x λ_min(F(x))`, if one was computed.
    pub dual_bound: Option<f64>,
    pub iterations: usize,
}

impl FeasibilityResult {
    pub(crate) fn with_certificate(
        status: FeasibilityStatus,
        l: usize,
        x: Vec<f64>,
        min_eig: f64,
        dual_bound: Option<f64>,
        iterations: usize,
    ) -> Self {
        let (certificate_x, upsilon0) = if status.is_feasible() {
            let ups = heart_map(l, &x).expect("certificate length is L(L+1)");
            (Some(x), Some(ups))
        } else {
            (None, None)
        };
        FeasibilityResult {
            status,
            certificate_x,
            upsilon0,
            min_eig,
            dual_bound,
            iterations,
        }
    }
}

/// Upper-triangular `(i, j)` pairs in the order `heart_map` consumes them.
fn triangle(l: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..l).flat_map(move |i| (i..l).map(move |j| (i, j)))
}

/// Real vector of length `L(L+1)` → complex symmetric `L × L`.
///
/// Upper-triangular entries `(i ≤ j)` are visited row-major; each takes two
/// consecutive slots as (real, imaginary). `(j, i)` mirrors `(i, j)`.
pub fn heart_map(l: usize, x: &[f64]) -> Result<DMatrix<Complex64>> {
    if x.len() != l * (l + 1) {
        return Err(Error::DimensionMismatch {
            expected: l * (l + 1),
            got: x.len(),
        });
    }
    let mut m = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for (p, (i, j)) in triangle(l).enumerate() {
        let v = Complex64::new(x[2 * p], x[2 * p + 1]);
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

/// Inverse of [`heart_map`]; reads only the upper triangle.
pub fn heart_unmap(upsilon: &DMatrix<Complex64>) -> Vec<f64> {
    let l = upsilon.nrows();
    let mut x = Vec::with_capacity(l * (l + 1));
    for (i, j) in triangle(l) {
        x.push(upsilon[(i, j)].re);
        x.push(upsilon[(i, j)].im);
    }
    x
}

/// Derivatives `∂♠/∂x_j`, one `2L × 2L` matrix per unknown.
#[derive(Debug)]
pub struct SpadeBasis {
    pub l: usize,
    pub mats: Vec<DMatrix<f64>>,
}

impl SpadeBasis {
    fn build(l: usize) -> Self {
        let zero = vec![0.0; l];
        let n = l * (l + 1);
        let mats = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let ups = heart_map(l, &e).expect("basis vector has the right length");
                RealUForm::from_parts(&zero, &ups).into_matrix()
            })
            .collect();
        SpadeBasis { l, mats }
    }

    /// `v^T B_j v` for every `j`.
    pub fn quadratic_forms(&self, v: &[f64]) -> Vec<f64> {
        self.mats
            .iter()
            .map(|b| {
                let mut acc = 0.0;
                for (r, vr) in v.iter().enumerate() {
                    if *vr == 0.0 {
                        continue;
                    }
                    let row: f64 = b.row(r).iter().zip(v).map(|(bij, vj)| bij * vj).sum();
                    acc += vr * row;
                }
                acc
            })
            .collect()
    }
}

/// Cached basis for `L` channels; built once per dimension.
pub fn spade_basis(l: usize) -> Arc<SpadeBasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SpadeBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(l)
        .or_insert_with(|| Arc::new(SpadeBasis::build(l)))
        .clone()
}

/// `♠(x) = U(I, heart_map(x))`.
pub fn spade(l: usize, x: &[f64]) -> Result<DMatrix<f64>> {
    let ups = heart_map(l, x)?;
    Ok(RealUForm::from_parts(&vec![1.0; l], &ups).into_matrix())
}

/// The full block-diagonal `F(x)` of size `2L(K+1)`.
pub fn assemble_f(x: &[f64], problem: &FeasibilityProblem) -> Result<DMatrix<f64>> {
    let blocks = problem.blocks(x)?;
    let b = 2 * problem.channels();
    let mut f = DMatrix::zeros(b * blocks.len(), b * blocks.len());
    for (k, block) in blocks.iter().enumerate() {
        f.view_mut((k * b, k * b), (b, b)).copy_from(block);
    }
    Ok(f)
}

/// Sufficient-only test: is `Υ_0 = 0` (quantum state diffusion) a common fine-graining?
pub fn qsd_coarse_check(problem: &FeasibilityProblem) -> bool {
    let x = vec![0.0; problem.n_vars()];
    problem
        .blocks(&x)
        .map(|blocks| {
            blocks
                .iter()
                .all(|b| linalg::is_psd(b, linalg::DEFAULT_PSD_TOL).unwrap_or(false))
        })
        .unwrap_or(false)
}

/// Input file: `{ "unravelings": [ ... ] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub unravelings: Vec<UnravelingJson>,
}

impl TryFrom<&ProblemJson> for FeasibilityProblem {
    type Error = Error;

    fn try_from(p: &ProblemJson) -> Result<Self> {
        let us = p
            .unravelings
            .iter()
            .map(UnravelingMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        FeasibilityProblem::new(us)
    }
}

impl From<&FeasibilityProblem> for ProblemJson {
    fn from(p: &FeasibilityProblem) -> Self {
        ProblemJson {
            unravelings: p.unravelings.iter().map(UnravelingJson::from).collect(),
        }
    }
}

/// Output file of a feasibility run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultJson {
    pub status: FeasibilityStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upsilon0_re: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upsilon0_im: Option<Vec<Vec<f64>>>,
    pub min_eig: f64,
    pub iterations: usize,
}

impl From<&FeasibilityResult> for ResultJson {
    fn from(r: &FeasibilityResult) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            r.upsilon0.as_ref().map(|u| {
                (0..u.nrows())
                    .map(|i| (0..u.ncols()).map(|j| f(&u[(i, j)])).collect())
                    .collect()
            })
        };
        ResultJson {
            status: r.status,
            upsilon0_re: rows(|c| c.re),
            upsilon0_im: rows(|c| c.im),
            min_eig: r.min_eig,
            iterations: r.iterations,
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn to_dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unravel::build_unraveling;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(eta: f64, re: f64, im: f64) -> UnravelingMatrix {
        UnravelingMatrix::scalar(eta, c(re, im)).unwrap()
    }

    #[test]
    fn heart_examples() {
        let m = heart_map(1, &[0.3, -0.2]).unwrap();
        assert_eq!(m[(0, 0)], c(0.3, -0.2));

        let m = heart_map(2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
        assert_eq!(m[(1, 1)], c(0.0, 0.0));

        let m = heart_map(2, &[0.0, 0.0, 0.5, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(m[(0, 1)], c(0.5, 0.25));
        assert_eq!(m[(1, 0)], c(0.5, 0.25));

        assert!(matches!(
            heart_map(2, &[0.0; 5]),
            Err(Error::DimensionMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn single_block_at_origin_is_half_identity() {
        let f = spade(1, &[0.0, 0.0]).unwrap();
        assert_eq!(f, DMatrix::identity(2, 2) * 0.5);
    }

    #[test]
    fn assembled_blocks_for_one_homodyne() {
        let p = FeasibilityProblem::new(vec![scalar(0.5, 0.5, 0.0)]).unwrap();
        let f = assemble_f(&[0.5, 0.0], &p).unwrap();
        assert_eq!(f.nrows(), 4);
        let first = f.view((0, 0), (2, 2)).into_owned();
        let second = f.view((2, 2), (2, 2)).into_owned();
        // U(1, 0.5) has eigenvalues {0.75, 0.25}; U(0.5, 0) = diag(0.25, 0.25).
        let (v1, _) = linalg::sorted_eigen(&first);
        let (v2, _) = linalg::sorted_eigen(&second);
        assert!((v1[0] - 0.25).abs() < 1e-15 && (v1[1] - 0.75).abs() < 1e-15);
        assert!((v2[0] - 0.25).abs() < 1e-15 && (v2[1] - 0.25).abs() < 1e-15);
        assert!(f.view((0, 2), (2, 2)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn basis_reproduces_spade() {
        for l in 1..=3 {
            let basis = spade_basis(l);
            let x: Vec<f64> = (0..l * (l + 1)).map(|i| 0.1 * i as f64 - 0.3).collect();
            let mut acc = DMatrix::identity(2 * l, 2 * l) * 0.5;
            for (xj, b) in x.iter().zip(&basis.mats) {
                acc += b * *xj;
            }
            assert!((acc - spade(l, &x).unwrap()).abs().max() < 1e-15);
        }
        assert!(Arc::ptr_eq(&spade_basis(2), &spade_basis(2)));
    }

    #[test]
    fn quadratic_forms_match_dense_products() {
        let basis = spade_basis(2);
        let v = [0.3, -0.1, 0.7, 0.2];
        let dense: Vec<f64> = basis
            .mats
            .iter()
            .map(|b| {
                let dv = to_dvec(&v);
                (dv.transpose() * b * &dv)[(0, 0)]
            })
            .collect();
        for (a, b) in basis.quadratic_forms(&v).iter().zip(dense) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn qsd_check_examples() {
        let low = FeasibilityProblem::new(vec![scalar(0.5, 0.5, 0.0), scalar(0.4, -0.4, 0.0)]).unwrap();
        assert!(qsd_coarse_check(&low));
        let high = FeasibilityProblem::new(vec![scalar(0.8, 0.8, 0.0)]).unwrap();
        assert!(!qsd_coarse_check(&high));
        let plain = FeasibilityProblem::new(vec![scalar(0.3, 0.0, 0.0)]).unwrap();
        assert!(qsd_coarse_check(&plain));
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(FeasibilityProblem::new(vec![]), Err(Error::EmptyProblem)));
        let two = build_unraveling(&[0.5, 0.5], &DMatrix::from_element(2, 2, c(0.0, 0.0))).unwrap();
        assert!(matches!(
            FeasibilityProblem::new(vec![scalar(0.5, 0.0, 0.0), two]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            FeasibilityProblem::new(vec![scalar(0.5, 0.9, 0.0)]),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn result_json_omits_absent_certificate() {
        let r = FeasibilityResult::with_certificate(FeasibilityStatus::Infeasible, 1, vec![0.0, 0.0], -0.1, None, 3);
        let text = serde_json::to_string(&ResultJson::from(&r)).unwrap();
        assert_eq!(text, r#"{"status":"INFEASIBLE","min_eig":-0.1,"iterations":3}"#);
    }

    proptest! {
        #[test]
        fn heart_round_trip(l in 1usize..5, seed in proptest::collection::vec(-2.0..2.0f64, 20)) {
            let x: Vec<f64> = seed.into_iter().take(l * (l + 1)).collect();
            let m = heart_map(l, &x).unwrap();
            prop_assert_eq!(heart_unmap(&m), x);
            prop_assert_eq!(m.transpose(), m);
        }

        #[test]
        fn f_is_affine(a in proptest::collection::vec(-1.0..1.0f64, 6),
                       b in proptest::collection::vec(-1.0..1.0f64, 6),
                       alpha in 0.0..1.0f64) {
            let p = FeasibilityProblem::new(vec![
                build_unraveling(&[0.4, 0.6], &DMatrix::from_diagonal_element(2, 2, c(0.1, 0.2))).unwrap(),
            ]).unwrap();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| alpha * u + (1.0 - alpha) * v).collect();
            let lhs = assemble_f(&mid, &p).unwrap();
            let rhs = assemble_f(&a, &p).unwrap() * alpha + assemble_f(&b, &p).unwrap() * (1.0 - alpha);
            prop_assert!((lhs - rhs).abs().max() < 1e-14);
        }
    }
}
