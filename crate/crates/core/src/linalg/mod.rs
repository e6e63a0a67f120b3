//! Dense and CSR matrix storage, Gram spectra, and least-squares reference
//! solutions.

mod eig;
mod factor;
mod matrix;

pub use eig::{iter_mat_mul, jacobi_eigh, spectral_norm_sym, JacobiEig};
pub use factor::{cholesky_solve, householder_qr};
pub use matrix::{Matrix, RowView};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative threshold below which the Gram matrix is treated as singular.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

/// Eigenvalue summary of `A^T A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    /// All `d` eigenvalues of the Gram matrix, ascending.
    pub eigs: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub lambda_ave: f64,
    /// lambda_max / lambda_min
    pub kappa: f64,
    /// lambda_ave / lambda_min (smoothed condition number)
    pub kappa_bar: f64,
    /// Squared Frobenius norm of A (= sum of eigenvalues).
    pub frob_sq: f64,
    /// Squared operator norm of A (= lambda_max).
    pub op_sq: f64,
}

impl SpectrumSummary {
    pub fn from_eigs(mut eigs: Vec<f64>) -> Self {
        eigs.sort_by(f64::total_cmp);
        let d = eigs.len();
        let lambda_min = eigs[0];
        let lambda_max = eigs[d - 1];
        let frob_sq: f64 = eigs.iter().sum();
        let lambda_ave = frob_sq / d as f64;
        SpectrumSummary {
            eigs,
            lambda_max,
            lambda_min,
            lambda_ave,
            kappa: lambda_max / lambda_min,
            kappa_bar: lambda_ave / lambda_min,
            frob_sq,
            op_sq: lambda_max,
        }
    }
}

/// Eigenvalues of the explicitly formed `d x d` Gram matrix, plus derived
/// condition numbers. Requires `n >= d` and a numerically positive definite
/// Gram matrix.
pub fn gram_spectrum(a: &Matrix) -> Result<SpectrumSummary> {
    if a.ncols() > a.nrows() {
        return Err(Error::Dimension(format!(
            "gram_spectrum needs n >= d, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let g = a.gram();
    let eig = jacobi_eigh(&g, a.ncols(), false);
    let summary = SpectrumSummary::from_eigs(eig.values);
    if summary.lambda_min <= SINGULAR_REL_TOL * summary.lambda_max {
        return Err(Error::SingularGram {
            lambda_min: summary.lambda_min,
            threshold: SINGULAR_REL_TOL * summary.lambda_max,
        });
    }
    Ok(summary)
}

/// Minimizer of `||Ax - b||` via a direct dense solve of the normal
/// equations `A^T A x = A^T b`.
pub fn least_squares_solution(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "rhs length {} does not match row count {}",
            b.len(),
            a.nrows()
        )));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::Dimension(format!(
            "least squares needs n >= d, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let g = a.gram();
    let atb = a.matvec_transpose(b);
    cholesky_solve(&g, a.ncols(), &atb)
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance between two vectors.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
