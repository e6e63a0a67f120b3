//! Matrix-concentration bound calculators and the Monte Carlo estimators
//! that verify them on row-sampling matrices.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigh, spectral_norm_sym, Matrix};
use crate::momentum::BatchBound;
use crate::rng::{stream_id, stream_rng};
use crate::sampling::Sampler;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Matrix Bernstein expectation bounds for a sum `Z` of independent
/// zero-mean `d1 x d2` matrices with variance statistic `v` and a.s. norm
/// bound `w_max`:
/// `E||Z||        <= sqrt(2 v log(d1+d2)) + w_max log(d1+d2) / 3`
/// `sqrt(E||Z||^2) <= sqrt(2 e v log(d1+d2)) + 4 e w_max log(d1+d2)`.
pub fn bernstein_bounds(v: f64, w_max: f64, d1: usize, d2: usize) -> (f64, f64) {
    let logd = ((d1 + d2) as f64).ln();
    let first = (2.0 * v * logd).sqrt() + w_max * logd / 3.0;
    let second = (2.0 * E * v * logd).sqrt() + 4.0 * E * w_max * logd;
    (first, second)
}

/// Expectation bound for a product of `k` independent square random
/// matrices with `||E X_i|| <= q_i` and relative deviations `sigma_i`:
/// `E||X_k ... X_1|| <= (prod q_i) exp(sqrt(2 v max{2v, log k}))`,
/// `v = sum sigma_i^2`. An empty product is bounded by 1.
pub fn product_bound(q: &[f64], sigma: &[f64]) -> Result<f64> {
    if q.len() != sigma.len() {
        return Err(Error::Dimension(format!(
            "factor lists disagree: {} vs {}",
            q.len(),
            sigma.len()
        )));
    }
    if q.iter().chain(sigma).any(|&x| x < 0.0) {
        return Err(Error::Param("q_i and sigma_i must be nonnegative".into()));
    }
    let k = q.len();
    if k == 0 {
        return Ok(1.0);
    }
    let big_q: f64 = q.iter().product();
    let v: f64 = sigma.iter().map(|s| s * s).sum();
    let inner = 2.0 * v * (2.0 * v).max((k as f64).ln());
    Ok(big_q * inner.sqrt().exp())
}

/// Batch size guaranteeing `sqrt(E||W||^2) <= delta` for the centered
/// row-sampling matrix `W`:
/// `B >= 8 e eta log(2d) max{ ||A||_F^2 ||A||^2 / delta^2, 2 ||A||_F^2 / delta }`.
pub fn lemma31_batch(frob_sq: f64, op_sq: f64, d: usize, eta: f64, delta: f64) -> Result<BatchBound> {
    if !(delta > 0.0) {
        return Err(Error::Param(format!("delta must be positive, got {delta}")));
    }
    let branch_sampling = frob_sq * op_sq / (delta * delta);
    let branch_frobenius = (4.0 * frob_sq * frob_sq / (delta * delta)).sqrt();
    let raw = 8.0 * E * eta * (2.0 * d as f64).ln() * branch_sampling.max(branch_frobenius);
    Ok(BatchBound {
        b: raw.ceil().max(1.0) as usize,
        raw,
        branch_sampling,
        branch_frobenius,
        delta,
    })
}

/// Monte Carlo sample statistics of `||W||` where
/// `W = A^T A - (1/B) sum_{j in S} p_j^{-1} a_j a_j^T` over i.i.d. batches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WSampleStats {
    pub trials: usize,
    pub batch: usize,
    /// Mean of ||W|| with its standard error.
    pub mean_norm: f64,
    pub mean_norm_se: f64,
    /// sqrt of the mean of ||W||^2 with the propagated standard error.
    pub rms_norm: f64,
    pub rms_norm_se: f64,
    /// Spectral norm of the empirical mean of W (should be ~0).
    pub mean_w_norm: f64,
    /// Spectral norm of the empirical mean of W^T W (variance statistic).
    pub v_empirical: f64,
}

/// Draw `trials` independent batches, form each `W` exactly as a dense
/// `d x d` matrix, and record spectral-norm sample moments. Trials run in
/// parallel on independent streams; the reduction is done in trial order.
pub fn sample_w_norm(
    a: &Matrix,
    sampler: &Sampler,
    batch: usize,
    trials: usize,
    seed: u64,
) -> Result<WSampleStats> {
    if trials == 0 {
        return Err(Error::Param("need at least one trial".into()));
    }
    if batch == 0 {
        return Err(Error::Param("batch size must be at least 1".into()));
    }
    let d = a.ncols();
    let gram = a.gram();
    let per_trial: Vec<(f64, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, stream_id(&[0x57, t as u64]));
            let counts = sampler.draw_counts(batch, &mut rng);
            let mut w = gram.clone();
            for (j, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let scale = c as f64 / (batch as f64 * sampler.probs[j]);
                let row = a.row(j);
                match row.cols {
                    None => {
                        for (p, &vp) in row.vals.iter().enumerate() {
                            let s = scale * vp;
                            for (q, &vq) in row.vals.iter().enumerate() {
                                w[p * d + q] -= s * vq;
                            }
                        }
                    }
                    Some(cols) => {
                        for (&cp, &vp) in cols.iter().zip(row.vals) {
                            let s = scale * vp;
                            for (&cq, &vq) in cols.iter().zip(row.vals) {
                                w[cp * d + cq] -= s * vq;
                            }
                        }
                    }
                }
            }
            (spectral_norm_sym(&w, d), w)
        })
        .collect();

    let tf = trials as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_quad = 0.0;
    let mut mean_w = vec![0.0; d * d];
    let mut mean_wtw = vec![0.0; d * d];
    for (nrm, w) in &per_trial {
        sum += nrm;
        sum_sq += nrm * nrm;
        sum_quad += nrm * nrm * nrm * nrm;
        for (acc, &wi) in mean_w.iter_mut().zip(w) {
            *acc += wi / tf;
        }
        // W is symmetric, so W^T W = W W
        for p in 0..d {
            for q in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += w[p * d + k] * w[k * d + q];
                }
                mean_wtw[p * d + q] += acc / tf;
            }
        }
    }
    let mean_norm = sum / tf;
    let mean_sq = sum_sq / tf;
    let var_norm = (sum_sq / tf - mean_norm * mean_norm).max(0.0);
    let var_sq = (sum_quad / tf - mean_sq * mean_sq).max(0.0);
    let rms = mean_sq.sqrt();
    let rms_se = if rms > 0.0 {
        (var_sq / tf).sqrt() / (2.0 * rms)
    } else {
        0.0
    };
    Ok(WSampleStats {
        trials,
        batch,
        mean_norm,
        mean_norm_se: (var_norm / tf).sqrt(),
        rms_norm: rms,
        rms_norm_se: rms_se,
        mean_w_norm: spectral_norm_sym(&mean_w, d),
        v_empirical: spectral_norm_sym(&mean_wtw, d),
    })
}

/// Analytic inputs and Monte Carlo verification for one problem/batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub d: usize,
    pub eta: f64,
    pub batch: usize,
    pub trials: usize,
    pub target_delta: f64,
    /// Batch size required by the closed-form rule for `target_delta`.
    pub b_required: usize,
    /// Variance statistic bound `eta ||A||_F^2 ||A||^2 / B`.
    pub v_bound: f64,
    /// Almost-sure summand bound `2 eta ||A||_F^2 / B`.
    pub w_max: f64,
    pub bound_e_norm: f64,
    pub bound_sqrt_e_norm_sq: f64,
    pub empirical_e_norm: f64,
    pub empirical_e_norm_se: f64,
    pub empirical_sqrt_e_norm_sq: f64,
    pub empirical_sqrt_e_norm_sq_se: f64,
    pub empirical_mean_w_norm: f64,
    pub empirical_v: f64,
}

/// Run the Monte Carlo verification at the given batch size (defaulting to
/// the closed-form requirement for `target_delta`).
pub fn concentration_verify(
    a: &Matrix,
    sampler: &Sampler,
    batch: Option<usize>,
    target_delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    let d = a.ncols();
    let frob_sq = sampler.frob_sq;
    let gram = a.gram();
    let op_sq = jacobi_eigh(&gram, d, false)
        .values
        .iter()
        .fold(0.0f64, |m, &x| m.max(x));
    let required = lemma31_batch(frob_sq, op_sq, d, sampler.eta, target_delta)?;
    let batch = batch.unwrap_or(required.b);
    let v_bound = sampler.eta * frob_sq * op_sq / batch as f64;
    let w_max = 2.0 * sampler.eta * frob_sq / batch as f64;
    let (b1, b2) = bernstein_bounds(v_bound, w_max, d, d);
    let stats = sample_w_norm(a, sampler, batch, trials, seed)?;
    Ok(ConcentrationReport {
        n: a.nrows(),
        d,
        eta: sampler.eta,
        batch,
        trials,
        target_delta,
        b_required: required.b,
        v_bound,
        w_max,
        bound_e_norm: b1,
        bound_sqrt_e_norm_sq: b2,
        empirical_e_norm: stats.mean_norm,
        empirical_e_norm_se: stats.mean_norm_se,
        empirical_sqrt_e_norm_sq: stats.rms_norm,
        empirical_sqrt_e_norm_sq_se: stats.rms_norm_se,
        empirical_mean_w_norm: stats.mean_w_norm,
        empirical_v: stats.v_empirical,
    })
}
