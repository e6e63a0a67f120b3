//! Solver-level invariants: equivalence with the transition-matrix
//! recurrence, large-batch tracking of the deterministic method, batch-size
//! monotonicity, and the randomized Kaczmarz identity on a sparse instance.

use mkhbm_core::linalg::iter_mat_mul;
use mkhbm_core::momentum::{critical_batch_heuristic, hbm_params_perturbed};
use mkhbm_core::problems::{sparse_bernoulli_problem, spectrum_exponential, synth_svd_problem};
use mkhbm_core::rng::stream_id;
use mkhbm_core::sampling::SamplingScheme;
use mkhbm_core::solvers::{
    rk_step_equivalence_check, run_solver, SolverConfig, SolverMethod,
};

fn config(method: SolverMethod, params: mkhbm_core::momentum::MomentumParams, batch: usize, iters: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        method,
        params,
        batch_size: batch,
        scheme: SamplingScheme::RowNorm,
        max_iters: iters,
        seed,
        record_residuals: false,
        k_star: 10.0,
        x0: None,
    }
}

#[test]
fn deterministic_trace_matches_transition_powers() {
    let sq = spectrum_exponential(6, 9.0, 0.6).unwrap();
    let p = synth_svd_problem(30, 6, &sq, 21).unwrap();
    let params = hbm_params_perturbed(9.0, 1.0, 0.1).unwrap();
    let trace = run_solver(&p, &config(SolverMethod::Hbm, params, 0, 50, 0)).unwrap();

    // stacked error propagation through explicit powers of T
    let d = 6;
    let t = mkhbm_core::momentum::transition_matrix(&p.a, &params);
    let n2 = 2 * d;
    let mut stacked = vec![0.0; n2];
    for i in 0..d {
        stacked[i] = -p.x_star[i]; // x1 - x* with x1 = x0 = 0
        stacked[d + i] = -p.x_star[i];
    }
    let mut power = {
        let mut id = vec![0.0; n2 * n2];
        for i in 0..n2 {
            id[i * n2 + i] = 1.0;
        }
        id
    };
    for k in 1..50usize {
        power = iter_mat_mul(&t, &power, n2);
        let mut top = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..n2 {
                acc += power[i * n2 + j] * stacked[j];
            }
            top[i] = acc;
        }
        // top block holds x_{k+1} - x*
        let err = top.iter().map(|v| v * v).sum::<f64>().sqrt();
        let solver_err = trace.err_norms[k + 1];
        assert!(
            (err - solver_err).abs() <= 1e-10,
            "k={k}: recurrence {err} vs solver {solver_err}"
        );
    }
}

#[test]
fn huge_batch_tracks_deterministic_hbm() {
    let sq = spectrum_exponential(32, 16.0, 0.5).unwrap();
    let p = synth_svd_problem(1000, 32, &sq, 13).unwrap();
    let params = hbm_params_perturbed(16.0, 1.0, 0.3).unwrap();
    let det = run_solver(&p, &config(SolverMethod::Hbm, params, 0, 50, 0)).unwrap();

    let batch = p.n() * 1000;
    let trials = 20;
    let mut rel_dev_per_iter = vec![Vec::with_capacity(trials); 51];
    for t in 0..trials {
        let tr = run_solver(
            &p,
            &config(SolverMethod::MinibatchHbm, params, batch, 50, stream_id(&[44, t as u64])),
        )
        .unwrap();
        for k in 0..=50 {
            let denom = det.err_norms[k].max(1e-300);
            rel_dev_per_iter[k].push((tr.err_norms[k] - det.err_norms[k]).abs() / denom);
        }
    }
    for (k, devs) in rel_dev_per_iter.iter_mut().enumerate() {
        devs.sort_by(f64::total_cmp);
        let median = devs[trials / 2];
        assert!(median <= 0.05, "iteration {k}: median relative deviation {median}");
    }
}

#[test]
fn median_error_nonincreasing_in_batch_size() {
    let d = 20;
    let sq = spectrum_exponential(d, 30.0, 0.8).unwrap();
    let p = synth_svd_problem(2000, d, &sq, 5).unwrap();
    let s = &p.spectrum;
    let params = hbm_params_perturbed(s.lambda_max, s.lambda_min, s.lambda_min / 1e3).unwrap();
    let bstar = critical_batch_heuristic(s.frob_sq, s.op_sq, d, &params).unwrap().b;

    let iters = 100;
    let trials = 20;
    let mut medians = Vec::new();
    for (ci, scale) in [0.01f64, 0.1, 1.0].iter().enumerate() {
        let b = ((bstar as f64 * scale).ceil() as usize).max(1);
        let mut finals: Vec<f64> = (0..trials)
            .map(|t| {
                run_solver(
                    &p,
                    &config(
                        SolverMethod::MinibatchHbm,
                        params,
                        b,
                        iters,
                        stream_id(&[90, ci as u64, t as u64]),
                    ),
                )
                .unwrap()
                .err_norms[iters]
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        medians.push(finals[trials / 2]);
    }
    for w in medians.windows(2) {
        assert!(
            w[1] <= w[0] * 1.10,
            "median error increased with batch size: {medians:?}"
        );
    }
}

#[test]
fn rk_identity_on_sparse_bernoulli() {
    let p = sparse_bernoulli_problem(800, 30, 9).unwrap();
    let dev = rk_step_equivalence_check(&p, 3, 100).unwrap();
    assert!(dev <= 1e-12, "deviation {dev}");
}

#[test]
fn inconsistent_plateau_shrinks_with_batch() {
    // long-run plateau drops by roughly sqrt(10) when B grows 10x
    let d = 30;
    let sq = spectrum_exponential(d, 50.0, 0.5).unwrap();
    let p = synth_svd_problem(4000, d, &sq, 23).unwrap();
    let p = mkhbm_core::problems::make_inconsistent(&p, 1e-5, 77).unwrap();
    let s = &p.spectrum;
    let params = hbm_params_perturbed(s.lambda_max, s.lambda_min, s.lambda_min / 1e3).unwrap();

    let iters = 1000;
    let trials = 10;
    let plateau = |b: usize, tag: u64| -> f64 {
        let traces: Vec<Vec<f64>> = (0..trials)
            .map(|t| {
                run_solver(
                    &p,
                    &config(SolverMethod::MinibatchHbm, params, b, iters, stream_id(&[tag, t as u64])),
                )
                .unwrap()
                .err_norms
            })
            .collect();
        let mut med_curve = Vec::new();
        for k in 500..=iters {
            let mut vals: Vec<f64> = traces.iter().map(|tr| tr[k]).collect();
            vals.sort_by(f64::total_cmp);
            med_curve.push(vals[trials / 2]);
        }
        med_curve.sort_by(f64::total_cmp);
        med_curve[med_curve.len() / 2]
    };
    let lo = plateau(300, 61);
    let hi = plateau(3000, 62);
    assert!(lo.is_finite() && lo > 0.0 && hi > 0.0);
    let ratio = lo / hi;
    assert!(
        (2.0..=5.0).contains(&ratio),
        "plateau ratio at 10x batch: {ratio}"
    );
}
