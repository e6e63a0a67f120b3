//! Closed-form momentum parameter selection and spectral analysis of the
//! transition matrix: optimal/perturbed heavy-ball parameters, Nesterov
//! parameters, the stability window, per-eigenvalue 2x2 block eigenvalues,
//! eigenvector condition numbers (exact and bounded), and the batch-size
//! and convergence-horizon formulas.
//!
//! Complex quantities are carried as explicit (re, im) pairs.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gd,
    Hbm,
    Nag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Optimal,
    Perturbed,
    Manual,
}

/// Step-size and momentum parameters together with the curvature interval
/// `[ell, big_l]` they were derived from.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentumParams {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    /// Perturbation margin; zero unless provenance is Perturbed.
    pub gamma: f64,
    pub big_l: f64,
    pub ell: f64,
    pub provenance: Provenance,
}

fn check_spectrum_bounds(lambda_max: f64, lambda_min: f64) -> Result<()> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(Error::Param(format!(
            "need lambda_max >= lambda_min > 0, got ({lambda_max}, {lambda_min})"
        )));
    }
    Ok(())
}

/// Rate-optimal heavy-ball parameters. The resulting transition matrix is
/// defective whenever `lambda_max > lambda_min`: the blocks at the extreme
/// eigenvalues lose their second eigenvector, which is exactly why the
/// perturbed variant exists.
pub fn hbm_params_optimal(lambda_max: f64, lambda_min: f64) -> Result<MomentumParams> {
    check_spectrum_bounds(lambda_max, lambda_min)?;
    let sqrt_alpha = 2.0 / (lambda_max.sqrt() + lambda_min.sqrt());
    let alpha = sqrt_alpha * sqrt_alpha;
    let kappa = lambda_max / lambda_min;
    let sqrt_beta = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    Ok(MomentumParams {
        method: Method::Hbm,
        alpha,
        beta: sqrt_beta * sqrt_beta,
        gamma: 0.0,
        big_l: lambda_max,
        ell: lambda_min,
        provenance: Provenance::Optimal,
    })
}

/// Heavy-ball parameters for the widened interval `L = lambda_max + gamma`,
/// `ell = lambda_min - gamma`, which makes every block's eigenvalue pair
/// strictly complex and the transition matrix diagonalizable.
pub fn hbm_params_perturbed(lambda_max: f64, lambda_min: f64, gamma: f64) -> Result<MomentumParams> {
    check_spectrum_bounds(lambda_max, lambda_min)?;
    if !(gamma > 0.0 && gamma < lambda_min) {
        return Err(Error::Param(format!(
            "gamma must lie in (0, lambda_min), got {gamma}"
        )));
    }
    let big_l = lambda_max + gamma;
    let ell = lambda_min - gamma;
    let sqrt_alpha = 2.0 / (big_l.sqrt() + ell.sqrt());
    let alpha = sqrt_alpha * sqrt_alpha;
    let sqrt_beta = alpha * (big_l - ell) / 4.0;
    Ok(MomentumParams {
        method: Method::Hbm,
        alpha,
        beta: sqrt_beta * sqrt_beta,
        gamma,
        big_l,
        ell,
        provenance: Provenance::Perturbed,
    })
}

/// Nesterov parameters `alpha = 1/L`, `beta = (sqrt(L/ell)-1)/(sqrt(L/ell)+1)`.
///
/// With `L = lambda_max`, `ell = lambda_min` exactly, the blocks at both
/// spectrum edges are defective; pass widened bounds when a finite
/// eigenvector condition number is needed.
pub fn nag_params(lambda_max: f64, lambda_min: f64) -> Result<MomentumParams> {
    check_spectrum_bounds(lambda_max, lambda_min)?;
    let s = (lambda_max / lambda_min).sqrt();
    Ok(MomentumParams {
        method: Method::Nag,
        alpha: 1.0 / lambda_max,
        beta: (s - 1.0) / (s + 1.0),
        gamma: 0.0,
        big_l: lambda_max,
        ell: lambda_min,
        provenance: Provenance::Optimal,
    })
}

/// Plain gradient descent with `alpha = 1/lambda_max`.
pub fn gd_params(lambda_max: f64) -> Result<MomentumParams> {
    check_spectrum_bounds(lambda_max, lambda_max)?;
    Ok(MomentumParams {
        method: Method::Gd,
        alpha: 1.0 / lambda_max,
        beta: 0.0,
        gamma: 0.0,
        big_l: lambda_max,
        ell: lambda_max,
        provenance: Provenance::Manual,
    })
}

pub fn manual_params(method: Method, alpha: f64, beta: f64, lambda_max: f64, lambda_min: f64) -> Result<MomentumParams> {
    check_spectrum_bounds(lambda_max, lambda_min)?;
    if !(alpha > 0.0) || !(0.0..1.0).contains(&beta) {
        return Err(Error::Param(format!(
            "need alpha > 0 and beta in [0,1), got ({alpha}, {beta})"
        )));
    }
    Ok(MomentumParams {
        method,
        alpha,
        beta,
        gamma: 0.0,
        big_l: lambda_max,
        ell: lambda_min,
        provenance: Provenance::Manual,
    })
}

impl MomentumParams {
    /// Asymptotic contraction factor in the all-complex regime.
    pub fn sqrt_beta(&self) -> f64 {
        self.beta.sqrt()
    }

    /// True when these parameters sit on the defective boundary where the
    /// transition matrix has no complete eigenvector basis.
    pub fn transition_defective(&self) -> bool {
        match self.provenance {
            Provenance::Optimal => self.big_l > self.ell,
            _ => false,
        }
    }
}

/// Open step-size interval in which every transition block has a strictly
/// complex eigenvalue pair of modulus `sqrt(beta)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityWindow {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl StabilityWindow {
    pub fn is_empty(&self) -> bool {
        self.alpha_lo >= self.alpha_hi
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.alpha_lo < alpha && alpha < self.alpha_hi
    }
}

pub fn stability_window(beta: f64, lambda_max: f64, lambda_min: f64) -> StabilityWindow {
    let sb = beta.sqrt();
    StabilityWindow {
        alpha_lo: (1.0 - sb) * (1.0 - sb) / lambda_min,
        alpha_hi: (1.0 + sb) * (1.0 + sb) / lambda_max,
    }
}

/// Eigenvalue pair of the 2x2 transition block for one Gram eigenvalue.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockEig {
    pub lambda: f64,
    /// (re, im) of z_plus.
    pub z_plus: (f64, f64),
    /// (re, im) of z_minus.
    pub z_minus: (f64, f64),
    pub is_complex_pair: bool,
    /// Shared real part a when complex.
    pub re: f64,
    /// Imaginary part b >= 0 of z_plus (zero in the real/defective cases).
    pub im: f64,
}

impl BlockEig {
    /// Larger eigenvalue modulus of the block.
    pub fn modulus(&self) -> f64 {
        let m = |(re, im): (f64, f64)| (re * re + im * im).sqrt();
        m(self.z_plus).max(m(self.z_minus))
    }

    /// Zero discriminant: a repeated eigenvalue with a single eigenvector.
    pub fn is_defective(&self) -> bool {
        !self.is_complex_pair && self.z_plus == self.z_minus
    }
}

/// Eigenvalues of the block for Gram eigenvalue `lambda`.
///
/// Heavy ball: z^2 - (1 + beta - alpha*lambda) z + beta = 0.
/// Nesterov:   z^2 - (1 + beta)(1 - alpha*lambda) z + beta (1 - alpha*lambda) = 0.
pub fn block_eig(lambda: f64, params: &MomentumParams) -> BlockEig {
    let (trace, det) = match params.method {
        Method::Nag => {
            let w = 1.0 - params.alpha * lambda;
            ((1.0 + params.beta) * w, params.beta * w)
        }
        _ => (
            1.0 + params.beta - params.alpha * lambda,
            params.beta,
        ),
    };
    let disc = trace * trace - 4.0 * det;
    if disc < 0.0 {
        let re = trace / 2.0;
        let im = (-disc).sqrt() / 2.0;
        BlockEig {
            lambda,
            z_plus: (re, im),
            z_minus: (re, -im),
            is_complex_pair: true,
            re,
            im,
        }
    } else {
        let root = disc.sqrt();
        BlockEig {
            lambda,
            z_plus: ((trace + root) / 2.0, 0.0),
            z_minus: ((trace - root) / 2.0, 0.0),
            is_complex_pair: false,
            re: trace / 2.0,
            im: 0.0,
        }
    }
}

/// Dense `2d x 2d` transition matrix from an explicit Gram matrix.
pub fn transition_matrix_from_gram(gram: &[f64], d: usize, params: &MomentumParams) -> Vec<f64> {
    assert_eq!(gram.len(), d * d);
    let n2 = 2 * d;
    let mut t = vec![0.0; n2 * n2];
    match params.method {
        Method::Nag => {
            // [[ (1+b)(I - aG), -b(I - aG) ], [ I, 0 ]]
            for i in 0..d {
                for j in 0..d {
                    let w = if i == j { 1.0 } else { 0.0 } - params.alpha * gram[i * d + j];
                    t[i * n2 + j] = (1.0 + params.beta) * w;
                    t[i * n2 + d + j] = -params.beta * w;
                }
                t[(d + i) * n2 + i] = 1.0;
            }
        }
        _ => {
            // [[ (1+b)I - aG, -bI ], [ I, 0 ]]
            for i in 0..d {
                for j in 0..d {
                    let idm = if i == j { 1.0 } else { 0.0 };
                    t[i * n2 + j] = (1.0 + params.beta) * idm - params.alpha * gram[i * d + j];
                }
                t[i * n2 + d + i] = -params.beta;
                t[(d + i) * n2 + i] = 1.0;
            }
        }
    }
    t
}

/// Transition matrix for a diagonal Gram with the given eigenvalues.
pub fn transition_matrix_from_eigs(eigs: &[f64], params: &MomentumParams) -> Vec<f64> {
    let d = eigs.len();
    let mut gram = vec![0.0; d * d];
    for (i, &l) in eigs.iter().enumerate() {
        gram[i * d + i] = l;
    }
    transition_matrix_from_gram(&gram, d, params)
}

/// Transition matrix of the full problem `A`.
pub fn transition_matrix(a: &Matrix, params: &MomentumParams) -> Vec<f64> {
    transition_matrix_from_gram(&a.gram(), a.ncols(), params)
}

/// Exact spectral norm of the 2x2 eigenvector block C = [[a+ib, a-ib], [1, 1]].
fn block_c_norms(re: f64, im: f64) -> (f64, f64) {
    // ||C||_F^2 = 2(a^2 + b^2) + 2, |det C| = 2|b|
    let f2 = 2.0 * (re * re + im * im) + 2.0;
    let det = 2.0 * im.abs();
    let inner = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((f2 + inner) / 2.0).sqrt();
    (smax, smax / det)
}

/// Exact eigenvector condition number `max_j ||C_j|| * max_j ||C_j^{-1}||`
/// over the per-eigenvalue blocks. Errors if any block is real or defective.
pub fn eig_cond_exact(eigs: &[f64], params: &MomentumParams) -> Result<f64> {
    let mut max_c: f64 = 0.0;
    let mut max_ci: f64 = 0.0;
    for &lambda in eigs {
        let blk = block_eig(lambda, params);
        if !blk.is_complex_pair {
            return Err(Error::NonDiagonalizable(format!(
                "block at lambda = {lambda} has a real or repeated eigenvalue pair"
            )));
        }
        let (c, ci) = block_c_norms(blk.re, blk.im);
        max_c = max_c.max(c);
        max_ci = max_ci.max(ci);
    }
    Ok(max_c * max_ci)
}

/// Closed-form upper bound `4 / (alpha * sqrt(gamma (gamma + lambda_max - lambda_min)))`
/// on the eigenvector condition number under the perturbed parameters.
pub fn eig_cond_bound(lambda_max: f64, lambda_min: f64, gamma: f64) -> Result<f64> {
    let params = hbm_params_perturbed(lambda_max, lambda_min, gamma)?;
    Ok(4.0 / (params.alpha * (gamma * (gamma + lambda_max - lambda_min)).sqrt()))
}

/// Per-eigenvalue block analysis of the transition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionAnalysis {
    pub params: MomentumParams,
    pub blocks: Vec<BlockEig>,
    pub spectral_radius: f64,
    pub all_complex: bool,
    pub kappa_c_exact: Option<f64>,
    pub kappa_c_bound: Option<f64>,
}

pub fn analyze_transition(eigs: &[f64], params: &MomentumParams) -> TransitionAnalysis {
    let blocks: Vec<BlockEig> = eigs.iter().map(|&l| block_eig(l, params)).collect();
    let spectral_radius = blocks.iter().map(BlockEig::modulus).fold(0.0, f64::max);
    let all_complex = blocks.iter().all(|b| b.is_complex_pair);
    let kappa_c_exact = eig_cond_exact(eigs, params).ok();
    let kappa_c_bound = if params.provenance == Provenance::Perturbed {
        eig_cond_bound(params.big_l - params.gamma, params.ell + params.gamma, params.gamma).ok()
    } else {
        None
    };
    TransitionAnalysis {
        params: *params,
        blocks,
        spectral_radius,
        all_complex,
        kappa_c_exact,
        kappa_c_bound,
    }
}

/// Default free parameter: the k* > e solving k*/log(k*) = sqrt(kappa),
/// clamped to e when sqrt(kappa) is below the attainable minimum.
pub fn kstar_default(kappa: f64) -> f64 {
    let target = kappa.max(1.0).sqrt();
    if target <= E {
        return E;
    }
    let mut k = target * target.ln().max(1.0);
    for _ in 0..200 {
        k = target * k.ln();
    }
    k
}

/// Rate-inflation exponent `delta = 2 log(k*) / (k* log(1/beta))`.
pub fn rate_inflation_delta(k_star: f64, beta: f64) -> f64 {
    2.0 * k_star.ln() / (k_star * (1.0 / beta).ln())
}

/// A batch-size requirement, before and after ceiling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatchBound {
    pub b: usize,
    pub raw: f64,
    /// Branch proportional to ||A||_F^2 ||A||^2.
    pub branch_sampling: f64,
    /// Square-root branch proportional to ||A||_F^2.
    pub branch_frobenius: f64,
    pub delta: f64,
}

fn ceil_batch(raw: f64) -> usize {
    raw.ceil().max(1.0) as usize
}

/// Heuristic critical batch size
/// `B* = 16 e ||A||_F^2 ||A||^2 log(2d) alpha^2 / (beta log(1/beta))`.
pub fn critical_batch_heuristic(
    frob_sq: f64,
    op_sq: f64,
    d: usize,
    params: &MomentumParams,
) -> Result<BatchBound> {
    if !(params.beta > 0.0 && params.beta < 1.0) {
        return Err(Error::Param(format!(
            "critical batch size needs beta in (0,1), got {}",
            params.beta
        )));
    }
    let raw = 16.0 * E * frob_sq * op_sq * (2.0 * d as f64).ln() * params.alpha * params.alpha
        / (params.beta * (1.0 / params.beta).ln());
    Ok(BatchBound {
        b: ceil_batch(raw),
        raw,
        branch_sampling: raw,
        branch_frobenius: raw,
        delta: 0.0,
    })
}

fn batch_bound_with_constants(
    frob_sq: f64,
    op_sq: f64,
    d: usize,
    eta: f64,
    params: &MomentumParams,
    kappa_c: f64,
    k_star: f64,
    c_sampling: f64,
    c_frobenius: f64,
) -> Result<BatchBound> {
    if !(k_star > 1.0) {
        return Err(Error::Param(format!("k* must exceed 1, got {k_star}")));
    }
    if !(params.beta > 0.0 && params.beta < 1.0) {
        return Err(Error::Param(format!(
            "batch bound needs beta in (0,1), got {}",
            params.beta
        )));
    }
    let window_hi = (1.0 + params.sqrt_beta()).powi(2) / op_sq;
    if params.alpha >= window_hi {
        return Err(Error::Precondition(format!(
            "alpha = {} is not strictly inside the stability window (upper edge {})",
            params.alpha, window_hi
        )));
    }
    let a2k2 = params.alpha * params.alpha * kappa_c * kappa_c;
    let growth = k_star / (params.beta * k_star.ln());
    let branch_sampling = c_sampling * frob_sq * op_sq * a2k2 * growth;
    let branch_frobenius = (c_frobenius * frob_sq * frob_sq * a2k2 * growth).sqrt();
    let raw = 16.0 * E * eta * (2.0 * d as f64).ln() * branch_sampling.max(branch_frobenius);
    Ok(BatchBound {
        b: ceil_batch(raw),
        raw,
        branch_sampling,
        branch_frobenius,
        delta: rate_inflation_delta(k_star, params.beta),
    })
}

/// Batch size under which minibatch heavy ball matches the deterministic
/// rate up to the `max{k, (k*)^{k/k*}}` envelope factor.
pub fn theorem_batch_bound(
    frob_sq: f64,
    op_sq: f64,
    d: usize,
    eta: f64,
    params: &MomentumParams,
    kappa_c: f64,
    k_star: f64,
) -> Result<BatchBound> {
    batch_bound_with_constants(frob_sq, op_sq, d, eta, params, kappa_c, k_star, 1.0, 2.0)
}

/// Nesterov analogue; the first branch carries an extra factor 5 and the
/// square-root branch an inner constant 10.
pub fn nag_batch_bound(
    frob_sq: f64,
    op_sq: f64,
    d: usize,
    eta: f64,
    params: &MomentumParams,
    kappa_c: f64,
    k_star: f64,
) -> Result<BatchBound> {
    batch_bound_with_constants(frob_sq, op_sq, d, eta, params, kappa_c, k_star, 5.0, 10.0)
}

/// Convergence-horizon bound for inconsistent systems:
/// `R = alpha kappa_C (k*+1) / (1 - sqrt(beta)^(1-delta)) *
///      ( sqrt(2 eta ||A||_F^2 log(d+1) ||r||^2 / B) + eta ||A||_F^2 log(d+1) sigma / (3B) )`.
#[allow(clippy::too_many_arguments)]
pub fn inconsistent_horizon_bound(
    r_norm: f64,
    sigma: f64,
    frob_sq: f64,
    eta: f64,
    d: usize,
    params: &MomentumParams,
    kappa_c: f64,
    k_star: f64,
    batch: usize,
) -> Result<f64> {
    let delta = rate_inflation_delta(k_star, params.beta);
    if !(delta < 1.0) {
        return Err(Error::Precondition(format!(
            "horizon bound needs delta = 2 log(k*)/(k* log(1/beta)) < 1, got {delta}"
        )));
    }
    let b = batch as f64;
    let logd = ((d + 1) as f64).ln();
    let amp = params.alpha * kappa_c * (k_star + 1.0)
        / (1.0 - params.sqrt_beta().powf(1.0 - delta));
    let noise = (2.0 * eta * frob_sq * logd * r_norm * r_norm / b).sqrt()
        + eta * frob_sq * logd * sigma / (3.0 * b);
    Ok(amp * noise)
}
