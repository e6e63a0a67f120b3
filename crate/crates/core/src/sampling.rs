//! Row-sampling distributions and i.i.d. with-replacement batch draws.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    /// p_j proportional to the squared row norm.
    RowNorm,
    /// p_j = 1/n.
    Uniform,
}

impl std::str::FromStr for SamplingScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rownorm" => Ok(SamplingScheme::RowNorm),
            "uniform" => Ok(SamplingScheme::Uniform),
            other => Err(Error::Param(format!("unknown sampling scheme '{other}'"))),
        }
    }
}

/// Row-sampling distribution with its importance constant `eta`, the
/// smallest value satisfying `eta * p_j >= ||a_j||^2 / ||A||_F^2` for all j.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub probs: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub scheme: SamplingScheme,
    pub eta: f64,
    pub row_norms_sq: Vec<f64>,
    pub frob_sq: f64,
}

/// Ordered list of sampled row indices; duplicates allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchIndices(pub Vec<usize>);

pub fn build_sampler(a: &Matrix, scheme: SamplingScheme) -> Result<Sampler> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let row_norms_sq = a.row_norms_sq();
    let frob_sq: f64 = row_norms_sq.iter().sum();
    if frob_sq == 0.0 {
        return Err(Error::Param("matrix has no nonzero entries".into()));
    }
    let (probs, eta) = match scheme {
        SamplingScheme::RowNorm => {
            if let Some(row) = row_norms_sq.iter().position(|&r| r == 0.0) {
                return Err(Error::ZeroRow { row });
            }
            let p: Vec<f64> = row_norms_sq.iter().map(|&r| r / frob_sq).collect();
            (p, 1.0)
        }
        SamplingScheme::Uniform => {
            let max_rn = row_norms_sq.iter().fold(0.0f64, |m, &r| m.max(r));
            let p = vec![1.0 / n as f64; n];
            (p, n as f64 * max_rn / frob_sq)
        }
    };
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    // pin the final prefix sum so inverse-CDF draws can never fall off the end
    *cumulative.last_mut().unwrap() = 1.0;
    Ok(Sampler {
        probs,
        cumulative,
        scheme,
        eta,
        row_norms_sq,
        frob_sq,
    })
}

impl Sampler {
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    /// One inverse-CDF draw.
    #[inline]
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.n() - 1)
    }

    /// `B` i.i.d. draws, reusing the caller's buffer.
    pub fn draw_batch_into(&self, batch: usize, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
        out.clear();
        out.reserve(batch);
        for _ in 0..batch {
            out.push(self.draw(rng));
        }
    }

    /// Occurrence counts of `B` i.i.d. draws, sampled directly as a
    /// multinomial via conditional binomials. Distributionally identical to
    /// counting `draw_batch` output but O(n) instead of O(B log n); used by
    /// the concentration estimators where B can exceed n by orders of
    /// magnitude.
    pub fn draw_counts(&self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
        let n = self.n();
        let mut counts = vec![0u64; n];
        let mut remaining = batch as u64;
        let mut rest = 1.0f64;
        for j in 0..n {
            if remaining == 0 {
                break;
            }
            if j == n - 1 {
                counts[j] = remaining;
                break;
            }
            let p = (self.probs[j] / rest).clamp(0.0, 1.0);
            let c = Binomial::new(remaining, p)
                .expect("valid binomial")
                .sample(rng);
            counts[j] = c;
            remaining -= c;
            rest = (rest - self.probs[j]).max(f64::MIN_POSITIVE);
        }
        counts
    }
}

pub fn draw_batch(s: &Sampler, batch: usize, rng: &mut ChaCha8Rng) -> Result<BatchIndices> {
    if batch == 0 {
        return Err(Error::Param("batch size must be at least 1".into()));
    }
    let mut out = Vec::new();
    s.draw_batch_into(batch, rng, &mut out);
    Ok(BatchIndices(out))
}
