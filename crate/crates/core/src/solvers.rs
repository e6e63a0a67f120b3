//! The iterative methods: gradient descent, deterministic heavy ball,
//! randomized Kaczmarz / SGD, minibatch heavy ball, and minibatch Nesterov,
//! sharing one two-term recurrence engine, plus the theoretical envelope
//! curves used for overlays.

use crate::error::{Error, Result};
use crate::momentum::{rate_inflation_delta, MomentumParams};
use crate::problems::ProblemInstance;
use crate::rng::stream_rng;
use crate::sampling::{build_sampler, BatchIndices, Sampler, SamplingScheme};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Gd,
    Hbm,
    SgdRk,
    MinibatchHbm,
    MinibatchNag,
}

impl SolverMethod {
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            SolverMethod::SgdRk | SolverMethod::MinibatchHbm | SolverMethod::MinibatchNag
        )
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(SolverMethod::Gd),
            "hbm" => Ok(SolverMethod::Hbm),
            "sgd_rk" | "rk" => Ok(SolverMethod::SgdRk),
            "minibatch_hbm" | "mb_hbm" => Ok(SolverMethod::MinibatchHbm),
            "minibatch_nag" | "mb_nag" => Ok(SolverMethod::MinibatchNag),
            other => Err(Error::Param(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub params: MomentumParams,
    /// Ignored by deterministic methods; forced to 1 by SGD/RK.
    pub batch_size: usize,
    pub scheme: SamplingScheme,
    pub max_iters: usize,
    pub seed: u64,
    pub record_residuals: bool,
    /// Free envelope parameter, carried for reporting only.
    pub k_star: f64,
    /// Starting point; zero vector when absent.
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Completed,
    Diverged { at_iter: usize },
}

/// Per-iteration error norms `||x_k - x*||` (index k, starting at x_0),
/// with optional residual norms `||A x_k - b||`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub err_norms: Vec<f64>,
    pub res_norms: Option<Vec<f64>>,
    pub iters_run: usize,
    pub status: SolveStatus,
    pub seed: u64,
    pub fingerprint: String,
}

/// Growth factor over the initial error past which a run is declared
/// divergent instead of being allowed to overflow.
const DIVERGENCE_GUARD: f64 = 1e12;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn config_fingerprint(cfg: &SolverConfig, problem: &ProblemInstance) -> String {
    let text = format!(
        "{:?}|a={:.17e}|b={:.17e}|B={}|{:?}|iters={}|seed={}|kstar={:.17e}|gen={}|pseed={}|n={}|d={}",
        cfg.method,
        cfg.params.alpha,
        cfg.params.beta,
        cfg.batch_size,
        cfg.scheme,
        cfg.max_iters,
        cfg.seed,
        cfg.k_star,
        problem.generator,
        problem.seed,
        problem.n(),
        problem.d()
    );
    format!("{:016x}", fnv1a(text.as_bytes()))
}

/// Importance-weighted minibatch gradient
/// `(1/B) sum_{j in S} p_j^{-1} a_j (a_j^T x - b_j)`,
/// touching only the sampled rows.
pub fn minibatch_gradient(
    problem: &ProblemInstance,
    x: &[f64],
    batch: &BatchIndices,
    sampler: &Sampler,
) -> Vec<f64> {
    let mut g = vec![0.0; problem.d()];
    accumulate_minibatch_gradient(problem, x, &batch.0, sampler, &mut g);
    g
}

fn accumulate_minibatch_gradient(
    problem: &ProblemInstance,
    x: &[f64],
    batch: &[usize],
    sampler: &Sampler,
    g: &mut [f64],
) {
    g.fill(0.0);
    let inv_b = 1.0 / batch.len() as f64;
    for &j in batch {
        let row = problem.a.row(j);
        let resid = row.dot(x) - problem.b[j];
        row.axpy(inv_b * resid / sampler.probs[j], g);
    }
}

/// Same sum as `accumulate_minibatch_gradient` but driven by multinomial
/// occurrence counts; used when the batch exceeds the row count, where
/// drawing indices one by one costs more than touching every row once.
fn accumulate_minibatch_gradient_counts(
    problem: &ProblemInstance,
    x: &[f64],
    counts: &[u64],
    batch: usize,
    sampler: &Sampler,
    g: &mut [f64],
) {
    g.fill(0.0);
    let inv_b = 1.0 / batch as f64;
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let row = problem.a.row(j);
        let resid = row.dot(x) - problem.b[j];
        row.axpy(c as f64 * inv_b * resid / sampler.probs[j], g);
    }
}

fn full_gradient(problem: &ProblemInstance, x: &[f64], ax: &mut [f64], g: &mut [f64]) {
    problem.a.matvec_into(x, ax);
    for (r, bi) in ax.iter_mut().zip(&problem.b) {
        *r -= bi;
    }
    problem.a.matvec_transpose_into(ax, g);
}

fn residual_norm(problem: &ProblemInstance, x: &[f64], ax: &mut [f64]) -> f64 {
    problem.a.matvec_into(x, ax);
    ax.iter()
        .zip(&problem.b)
        .map(|(r, bi)| (r - bi) * (r - bi))
        .sum::<f64>()
        .sqrt()
}

/// Run one solver configuration. Deterministic methods ignore the sampler
/// and batch size; SGD/RK overrides them with the single-row Kaczmarz
/// configuration (`B = 1`, `beta = 0`, `alpha = 1/||A||_F^2`, row-norm
/// sampling).
pub fn run_solver(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<RunTrace> {
    let d = problem.d();
    let x0 = match &cfg.x0 {
        Some(v) => {
            if v.len() != d {
                return Err(Error::Dimension(format!(
                    "x0 length {} does not match d = {d}",
                    v.len()
                )));
            }
            v.clone()
        }
        None => vec![0.0; d],
    };

    let (params, batch_size, scheme) = match cfg.method {
        SolverMethod::SgdRk => {
            let frob_sq = problem.a.frob_sq();
            let mut p = cfg.params;
            p.alpha = 1.0 / frob_sq;
            p.beta = 0.0;
            (p, 1usize, SamplingScheme::RowNorm)
        }
        _ => (cfg.params, cfg.batch_size, cfg.scheme),
    };

    let sampler = if cfg.method.is_stochastic() {
        if batch_size == 0 {
            return Err(Error::Param("stochastic methods need batch size >= 1".into()));
        }
        Some(build_sampler(&problem.a, scheme)?)
    } else {
        None
    };

    let mut rng = stream_rng(cfg.seed, 0);
    let mut x_prev = x0.clone();
    let mut x = x0;
    let mut x_next = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut ax = vec![0.0; problem.n()];
    let mut batch: Vec<usize> = Vec::new();

    let mut err_norms = Vec::with_capacity(cfg.max_iters + 1);
    let mut res_norms = cfg.record_residuals.then(|| Vec::with_capacity(cfg.max_iters + 1));

    let err0 = crate::linalg::dist(&x, &problem.x_star);
    err_norms.push(err0);
    if let Some(res) = res_norms.as_mut() {
        res.push(residual_norm(problem, &x, &mut ax));
    }
    let guard = DIVERGENCE_GUARD * err0.max(f64::MIN_POSITIVE);
    let mut status = SolveStatus::Completed;

    if cfg.max_iters >= 1 {
        // x_1 = x_0
        err_norms.push(err0);
        if let Some(res) = res_norms.as_mut() {
            let r = res[0];
            res.push(r);
        }
    }

    let alpha = params.alpha;
    let beta = params.beta;
    for k in 1..cfg.max_iters {
        match cfg.method {
            SolverMethod::Gd | SolverMethod::Hbm => {
                full_gradient(problem, &x, &mut ax, &mut g);
            }
            SolverMethod::SgdRk | SolverMethod::MinibatchHbm => {
                let s = sampler.as_ref().unwrap();
                if batch_size >= problem.n() {
                    let counts = s.draw_counts(batch_size, &mut rng);
                    accumulate_minibatch_gradient_counts(problem, &x, &counts, batch_size, s, &mut g);
                } else {
                    s.draw_batch_into(batch_size, &mut rng, &mut batch);
                    accumulate_minibatch_gradient(problem, &x, &batch, s, &mut g);
                }
            }
            SolverMethod::MinibatchNag => {
                let s = sampler.as_ref().unwrap();
                for i in 0..d {
                    y[i] = x[i] + beta * (x[i] - x_prev[i]);
                }
                if batch_size >= problem.n() {
                    let counts = s.draw_counts(batch_size, &mut rng);
                    accumulate_minibatch_gradient_counts(problem, &y, &counts, batch_size, s, &mut g);
                } else {
                    s.draw_batch_into(batch_size, &mut rng, &mut batch);
                    accumulate_minibatch_gradient(problem, &y, &batch, s, &mut g);
                }
            }
        }
        match cfg.method {
            SolverMethod::MinibatchNag => {
                for i in 0..d {
                    x_next[i] = y[i] - alpha * g[i];
                }
            }
            SolverMethod::Gd => {
                for i in 0..d {
                    x_next[i] = x[i] - alpha * g[i];
                }
            }
            _ => {
                for i in 0..d {
                    x_next[i] = x[i] - alpha * g[i] + beta * (x[i] - x_prev[i]);
                }
            }
        }
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut x_next);

        let err = crate::linalg::dist(&x, &problem.x_star);
        err_norms.push(err);
        if let Some(res) = res_norms.as_mut() {
            res.push(residual_norm(problem, &x, &mut ax));
        }
        if !err.is_finite() || err > guard {
            status = SolveStatus::Diverged { at_iter: k + 1 };
            break;
        }
    }

    let iters_run = err_norms.len() - 1;
    Ok(RunTrace {
        err_norms,
        res_norms,
        iters_run,
        status,
        seed: cfg.seed,
        fingerprint: config_fingerprint(cfg, problem),
    })
}

/// Run the explicit Kaczmarz projection and the SGD/RK configuration with
/// shared row draws for `k` steps; returns the largest per-iteration
/// iterate deviation.
pub fn rk_step_equivalence_check(problem: &ProblemInstance, seed: u64, k: usize) -> Result<f64> {
    let sampler = build_sampler(&problem.a, SamplingScheme::RowNorm)?;
    let frob_sq = sampler.frob_sq;
    let d = problem.d();
    let mut rng = stream_rng(seed, 0);
    let mut xa = vec![0.0; d];
    let mut xb = vec![0.0; d];
    let mut max_dev = 0.0f64;
    for _ in 0..k {
        let j = sampler.draw(&mut rng);
        let row = problem.a.row(j);
        // explicit projection onto the j-th hyperplane
        let resid_a = row.dot(&xa) - problem.b[j];
        row.axpy(-resid_a / sampler.row_norms_sq[j], &mut xa);
        // SGD step with alpha = 1/||A||_F^2, B = 1, importance weight 1/p_j
        let resid_b = row.dot(&xb) - problem.b[j];
        row.axpy(-(1.0 / frob_sq) * resid_b / sampler.probs[j], &mut xb);
        max_dev = max_dev.max(crate::linalg::dist(&xa, &xb));
    }
    Ok(max_dev)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `sqrt(2) kappa_C (sqrt(beta))^k err0`
    HbmDet,
    /// deterministic envelope times `max{k, (k*)^(k/k*)}`
    Thm32,
    /// Thm32 envelope plus the convergence-horizon offset
    Thm34,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeInputs {
    pub kappa_c: f64,
    pub beta: f64,
    pub err0: f64,
    pub k_star: f64,
    /// Horizon offset R; only used by Thm34.
    pub horizon: f64,
}

/// Envelope values at k = 0..=k_max.
pub fn envelope_curve(kind: EnvelopeKind, inp: &EnvelopeInputs, k_max: usize) -> Result<Vec<f64>> {
    if !(inp.beta >= 0.0 && inp.beta < 1.0) {
        return Err(Error::Param(format!("beta must lie in [0,1), got {}", inp.beta)));
    }
    if matches!(kind, EnvelopeKind::Thm32 | EnvelopeKind::Thm34) {
        if !(inp.k_star > 1.0) {
            return Err(Error::Param(format!("k* must exceed 1, got {}", inp.k_star)));
        }
        if matches!(kind, EnvelopeKind::Thm34)
            && rate_inflation_delta(inp.k_star, inp.beta) >= 1.0
        {
            return Err(Error::Precondition(
                "horizon envelope needs delta = 2 log(k*)/(k* log(1/beta)) < 1".into(),
            ));
        }
    }
    let sqrt_beta = inp.beta.sqrt();
    let base = std::f64::consts::SQRT_2 * inp.kappa_c * inp.err0;
    let log_kstar = inp.k_star.ln();
    Ok((0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let det = base * sqrt_beta.powf(kf);
            match kind {
                EnvelopeKind::HbmDet => det,
                EnvelopeKind::Thm32 => det * kf.max((kf * log_kstar / inp.k_star).exp()),
                EnvelopeKind::Thm34 => {
                    det * kf.max((kf * log_kstar / inp.k_star).exp()) + inp.horizon
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::{gd_params, hbm_params_perturbed, manual_params, Method};
    use crate::problems::{spectrum_exponential, synth_svd_problem};

    fn basic_config(method: SolverMethod, params: MomentumParams, iters: usize) -> SolverConfig {
        SolverConfig {
            method,
            params,
            batch_size: 4,
            scheme: SamplingScheme::RowNorm,
            max_iters: iters,
            seed: 7,
            record_residuals: false,
            k_star: 10.0,
            x0: None,
        }
    }

    #[test]
    fn fixed_point_stays_exact() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(30, 4, &sq, 3).unwrap();
        let params = hbm_params_perturbed(9.0, 1.0, 0.1).unwrap();
        for method in [
            SolverMethod::Gd,
            SolverMethod::Hbm,
            SolverMethod::SgdRk,
            SolverMethod::MinibatchHbm,
            SolverMethod::MinibatchNag,
        ] {
            let mut cfg = basic_config(method, params, 40);
            cfg.x0 = Some(p.x_star.clone());
            let trace = run_solver(&p, &cfg).unwrap();
            assert!(
                trace.err_norms.iter().all(|&e| e == 0.0),
                "{method:?} drifted from the fixed point"
            );
        }
    }

    #[test]
    fn scalar_gd_solves_in_one_step() {
        let p = ProblemInstance {
            a: crate::linalg::Matrix::dense(1, 1, vec![1.0]),
            b: vec![1.0],
            x_star: vec![1.0],
            r: vec![0.0],
            sigma: 0.0,
            spectrum: crate::linalg::SpectrumSummary::from_eigs(vec![1.0]),
            consistent: true,
            generator: "manual".into(),
            seed: 0,
        };
        let cfg = basic_config(SolverMethod::Gd, gd_params(1.0).unwrap(), 3);
        let trace = run_solver(&p, &cfg).unwrap();
        assert_eq!(trace.err_norms[0], 1.0);
        assert_eq!(trace.err_norms[1], 1.0); // x1 = x0
        assert!(trace.err_norms[2].abs() < 1e-15);
    }

    #[test]
    fn single_row_gradient_is_full_gradient() {
        let p = ProblemInstance {
            a: crate::linalg::Matrix::dense(1, 2, vec![2.0, -1.0]),
            b: vec![0.5],
            x_star: vec![0.0, 0.0],
            r: vec![0.0],
            sigma: 0.0,
            spectrum: crate::linalg::SpectrumSummary::from_eigs(vec![1.0, 5.0]),
            consistent: true,
            generator: "manual".into(),
            seed: 0,
        };
        let sampler = build_sampler(&p.a, SamplingScheme::RowNorm).unwrap();
        let x = vec![0.3, 0.7];
        for b in [1usize, 3, 8] {
            let g = minibatch_gradient(&p, &x, &BatchIndices(vec![0; b]), &sampler);
            let mut ax = vec![0.0; 1];
            let mut full = vec![0.0; 2];
            full_gradient(&p, &x, &mut ax, &mut full);
            for (gi, fi) in g.iter().zip(&full) {
                assert!((gi - fi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minibatch_gradient_unbiased() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(25, 4, &sq, 5).unwrap();
        let sampler = build_sampler(&p.a, SamplingScheme::RowNorm).unwrap();
        let x: Vec<f64> = (0..4).map(|i| 0.3 * i as f64 - 0.5).collect();
        let mut ax = vec![0.0; p.n()];
        let mut full = vec![0.0; 4];
        full_gradient(&p, &x, &mut ax, &mut full);

        let trials = 100_000;
        let batch = 3;
        let mut rng = stream_rng(77, 0);
        let mut mean = vec![0.0; 4];
        let mut idx = Vec::new();
        let mut g = vec![0.0; 4];
        for _ in 0..trials {
            sampler.draw_batch_into(batch, &mut rng, &mut idx);
            accumulate_minibatch_gradient(&p, &x, &idx, &sampler, &mut g);
            for (m, gi) in mean.iter_mut().zip(&g) {
                *m += gi / trials as f64;
            }
        }
        let dev = crate::linalg::dist(&mean, &full);
        let scale = crate::linalg::norm(&full);
        assert!(dev <= 0.02 * scale, "bias {dev} vs gradient scale {scale}");
    }

    #[test]
    fn divergence_guard_triggers() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(30, 4, &sq, 3).unwrap();
        // alpha far beyond the stability window
        let params = manual_params(Method::Hbm, 5.0, 0.9, 9.0, 1.0).unwrap();
        let cfg = basic_config(SolverMethod::Hbm, params, 500);
        let trace = run_solver(&p, &cfg).unwrap();
        assert!(matches!(trace.status, SolveStatus::Diverged { .. }));
        assert!(trace.err_norms.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn rk_equivalence_tiny() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(30, 4, &sq, 3).unwrap();
        let dev = rk_step_equivalence_check(&p, 11, 100).unwrap();
        assert!(dev <= 1e-12, "deviation {dev}");
    }

    #[test]
    fn rk_equivalence_scale_invariant() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(30, 4, &sq, 3).unwrap();
        let mut scaled = p.clone();
        for v in scaled.b.iter_mut() {
            *v *= 8.0;
        }
        for v in scaled.x_star.iter_mut() {
            *v *= 8.0;
        }
        let d1 = rk_step_equivalence_check(&p, 4, 50).unwrap();
        let d2 = rk_step_equivalence_check(&scaled, 4, 50).unwrap();
        assert!(d1 <= 1e-12 && d2 <= 8.0 * 1e-12 + 1e-15);
    }

    #[test]
    fn envelope_at_zero_and_crossover() {
        let inp = EnvelopeInputs {
            kappa_c: 3.0,
            beta: 0.25,
            err0: 2.0,
            k_star: 8.0,
            horizon: 0.0,
        };
        let det = envelope_curve(EnvelopeKind::HbmDet, &inp, 10).unwrap();
        let thm = envelope_curve(EnvelopeKind::Thm32, &inp, 10).unwrap();
        let base = std::f64::consts::SQRT_2 * 3.0 * 2.0;
        assert!((det[0] - base).abs() < 1e-12);
        assert!((thm[0] - base).abs() < 1e-12);
        // at k = k*, both max-branches agree: k* = (k*)^(k*/k*)
        let k = 8usize;
        let expect = base * 8.0 * 0.5f64.powi(k as i32);
        assert!((thm[k] - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn envelope_horizon_added() {
        let inp = EnvelopeInputs {
            kappa_c: 1.0,
            beta: 0.25,
            err0: 1.0,
            k_star: 8.0,
            horizon: 0.125,
        };
        let t32 = envelope_curve(EnvelopeKind::Thm32, &inp, 5).unwrap();
        let t34 = envelope_curve(EnvelopeKind::Thm34, &inp, 5).unwrap();
        for (a, b) in t32.iter().zip(&t34) {
            assert!((b - a - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_shape_and_fingerprint_stability() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(30, 4, &sq, 3).unwrap();
        let params = hbm_params_perturbed(9.0, 1.0, 0.1).unwrap();
        let mut cfg = basic_config(SolverMethod::MinibatchHbm, params, 25);
        cfg.record_residuals = true;
        let t1 = run_solver(&p, &cfg).unwrap();
        let t2 = run_solver(&p, &cfg).unwrap();
        assert_eq!(t1.err_norms.len(), 26);
        assert_eq!(t1.res_norms.as_ref().unwrap().len(), 26);
        assert_eq!(t1.err_norms, t2.err_norms);
        assert_eq!(t1.fingerprint, t2.fingerprint);
        assert_eq!(t1.err_norms[1], t1.err_norms[0]);
    }
}
