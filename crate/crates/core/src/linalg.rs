//! Small dense helpers shared by the unraveling and feasibility code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest absolute difference between `m[(i, j)]` and `m[(j, i)]`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Scale-aware PSD test: `λ_min >= -tol * max|λ|`.
///
/// Inputs asymmetric beyond `1e-9` are rejected; smaller asymmetry is
/// symmetrized away before the eigensolve.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let asym = asymmetry(m);
    if asym > 1e-9 {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if m.nrows() == 0 {
        return Ok(true);
    }
    let eig = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(lo >= -tol * scale)
}

pub const DEFAULT_PSD_TOL: f64 = 1e-10;
