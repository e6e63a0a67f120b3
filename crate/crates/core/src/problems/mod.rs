//! Synthetic least-squares problem generators: prescribed-spectrum SVD
//! problems, sparse Bernoulli matrices, inconsistent perturbations, and a
//! simplified parallel-beam tomography system.

mod tomo;

pub use tomo::{disk_phantom, tomo_problem, tomo_system_matrix};

use crate::error::{Error, Result};
use crate::linalg::{
    gram_spectrum, householder_qr, least_squares_solution, norm, Matrix, SpectrumSummary,
};
use crate::rng::stream_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// A least-squares instance with its minimizer and residual statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Least-squares minimizer (equals the planted solution when consistent).
    pub x_star: Vec<f64>,
    /// Residual `A x* - b`.
    pub r: Vec<f64>,
    /// `max_i |r_i| / ||a_i||`.
    pub sigma: f64,
    pub spectrum: SpectrumSummary,
    pub consistent: bool,
    pub generator: String,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn r_norm(&self) -> f64 {
        norm(&self.r)
    }

    fn consistent_from_parts(
        a: Matrix,
        x_star: Vec<f64>,
        generator: &str,
        seed: u64,
    ) -> Result<ProblemInstance> {
        let spectrum = gram_spectrum(&a)?;
        let b = a.matvec(&x_star);
        let n = a.nrows();
        Ok(ProblemInstance {
            a,
            b,
            x_star,
            r: vec![0.0; n],
            sigma: 0.0,
            spectrum,
            consistent: true,
            generator: generator.to_string(),
            seed,
        })
    }
}

/// Squared singular values with exponentially decaying gaps:
/// `sigma_j^2 = 1 + ((j-1)/(d-1)) (kappa-1) rho^(d-j)`, `j = 1..d`.
pub fn spectrum_exponential(d: usize, kappa: f64, rho: f64) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Param("spectrum needs d >= 2".into()));
    }
    if !(kappa > 1.0) {
        return Err(Error::Param(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Param(format!("rho must lie in (0, 1], got {rho}")));
    }
    Ok((1..=d)
        .map(|j| {
            1.0 + (j as f64 - 1.0) / (d as f64 - 1.0) * (kappa - 1.0) * rho.powi((d - j) as i32)
        })
        .collect())
}

/// Squared singular values with algebraic decay:
/// `sigma_j^2 = 1 + ((j-1)/(d-1))^rho (kappa-1)`.
pub fn spectrum_algebraic(d: usize, kappa: f64, rho: f64) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Param("spectrum needs d >= 2".into()));
    }
    if !(kappa > 1.0) {
        return Err(Error::Param(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(rho > 0.0) {
        return Err(Error::Param(format!("rho must be positive, got {rho}")));
    }
    Ok((1..=d)
        .map(|j| 1.0 + ((j as f64 - 1.0) / (d as f64 - 1.0)).powf(rho) * (kappa - 1.0))
        .collect())
}

fn standard_normal_vec(len: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// `A = U diag(sigma) V^T` with `U` (n x d) and `V` (d x d) drawn as
/// sign-fixed orthonormal factors of Gaussian matrices, plus a planted
/// standard-normal solution and `b = A x*`.
pub fn synth_svd_problem(
    n: usize,
    d: usize,
    squared_singular_values: &[f64],
    seed: u64,
) -> Result<ProblemInstance> {
    if d == 0 || n < d {
        return Err(Error::Dimension(format!(
            "synth problem needs n >= d >= 1, got {n}x{d}"
        )));
    }
    if squared_singular_values.len() != d {
        return Err(Error::Dimension(format!(
            "expected {d} squared singular values, got {}",
            squared_singular_values.len()
        )));
    }
    if squared_singular_values.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Param("squared singular values must be positive".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let gu = standard_normal_vec(n * d, &mut rng);
    let gv = standard_normal_vec(d * d, &mut rng);
    let x_star = standard_normal_vec(d, &mut rng);

    let u = householder_qr(&gu, n, d);
    let v = householder_qr(&gv, d, d);
    let sig: Vec<f64> = squared_singular_values.iter().map(|s| s.sqrt()).collect();

    let mut vals = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += u[i * d + k] * sig[k] * v[j * d + k];
            }
            vals[i * d + j] = acc;
        }
    }
    ProblemInstance::consistent_from_parts(Matrix::dense(n, d, vals), x_star, "synth_svd", seed)
}

/// `A = D G` stored CSR, where `G` has Bernoulli(1/10) entries and `D` is
/// diagonal with entries 10 w.p. 1/10 and 1 otherwise. Zero rows are
/// re-drawn so every row admits a sampling probability.
pub fn sparse_bernoulli_problem(n: usize, d: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || d == 0 || n < d {
        return Err(Error::Dimension(format!(
            "bernoulli problem needs n >= d >= 1, got {n}x{d}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut vals = Vec::new();
    indptr.push(0usize);
    let mut cols = Vec::with_capacity(d);
    for _ in 0..n {
        cols.clear();
        loop {
            for j in 0..d {
                if rng.random::<f64>() < 0.1 {
                    cols.push(j);
                }
            }
            if !cols.is_empty() {
                break;
            }
        }
        let scale = if rng.random::<f64>() < 0.1 { 10.0 } else { 1.0 };
        for &j in &cols {
            indices.push(j);
            vals.push(scale);
        }
        indptr.push(vals.len());
    }
    let a = Matrix::csr(n, d, indptr, indices, vals);
    let x_star = standard_normal_vec(d, &mut rng);
    ProblemInstance::consistent_from_parts(a, x_star, "sparse_bernoulli", seed)
}

/// Replace `b` with `A x_planted + eps` where `eps` is uniform on the
/// sphere of the given radius, and recompute the least-squares minimizer
/// and residual statistics.
pub fn make_inconsistent(p: &ProblemInstance, radius: f64, seed: u64) -> Result<ProblemInstance> {
    if !p.consistent {
        return Err(Error::Precondition(
            "make_inconsistent expects a consistent instance".into(),
        ));
    }
    if radius < 0.0 {
        return Err(Error::Param(format!("radius must be >= 0, got {radius}")));
    }
    if radius == 0.0 {
        return Ok(p.clone());
    }
    let mut rng = stream_rng(seed, 1);
    let mut eps = standard_normal_vec(p.n(), &mut rng);
    let scale = radius / norm(&eps);
    for e in &mut eps {
        *e *= scale;
    }
    let mut b = p.a.matvec(&p.x_star);
    for (bi, ei) in b.iter_mut().zip(&eps) {
        *bi += ei;
    }
    let x_star = least_squares_solution(&p.a, &b)?;
    let mut r = p.a.matvec(&x_star);
    for (ri, bi) in r.iter_mut().zip(&b) {
        *ri -= bi;
    }
    let rn2 = p.a.row_norms_sq();
    let sigma = r
        .iter()
        .zip(&rn2)
        .map(|(&ri, &nn)| ri.abs() / nn.sqrt())
        .fold(0.0f64, f64::max);
    Ok(ProblemInstance {
        a: p.a.clone(),
        b,
        x_star,
        r,
        sigma,
        spectrum: p.spectrum.clone(),
        consistent: false,
        generator: format!("{}+inconsistent", p.generator),
        seed,
    })
}
