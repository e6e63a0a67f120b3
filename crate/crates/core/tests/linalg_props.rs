//! Cross-checks of the in-repo linear algebra against nalgebra oracles and
//! property tests of the storage invariants.

use mkhbm_core::linalg::{
    gram_spectrum, householder_qr, least_squares_solution, norm, Matrix,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dmatrix_of(a: &Matrix) -> DMatrix<f64> {
    let dense = a.to_dense();
    let (n, d) = (dense.nrows(), dense.ncols());
    if let Matrix::Dense { vals, .. } = dense {
        DMatrix::from_row_slice(n, d, &vals)
    } else {
        unreachable!()
    }
}

fn matrix_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = Matrix> {
    (2usize..=max_d)
        .prop_flat_map(move |d| (Just(d), d..=max_n))
        .prop_flat_map(|(d, n)| {
            (
                Just(n),
                Just(d),
                proptest::collection::vec(-5.0f64..5.0, n * d),
            )
        })
        .prop_map(|(n, d, vals)| Matrix::dense(n, d, vals))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_and_csr_matvec_agree(
        a in matrix_strategy(12, 6),
        xs in proptest::collection::vec(-3.0f64..3.0, 6),
    ) {
        let csr = a.to_csr();
        let x = &xs[..a.ncols()];
        let ya = a.matvec(x);
        let yb = csr.matvec(x);
        let scale = norm(&ya).max(1.0);
        for (u, v) in ya.iter().zip(&yb) {
            prop_assert!((u - v).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_frobenius(a in matrix_strategy(12, 5)) {
        if let Ok(s) = gram_spectrum(&a) {
            let frob_direct = a.frob_sq();
            prop_assert!((s.frob_sq - frob_direct).abs() <= 1e-8 * frob_direct.max(1.0));
            prop_assert!(s.kappa_bar <= s.kappa + 1e-12);
            prop_assert!(s.kappa <= a.ncols() as f64 * s.kappa_bar + 1e-9 * s.kappa);
        }
    }

    #[test]
    fn qr_factor_is_orthonormal(
        vals in proptest::collection::vec(-2.0f64..2.0, 10 * 3),
    ) {
        let q = householder_qr(&vals, 10, 3);
        for p in 0..3 {
            for r in 0..3 {
                let dot: f64 = (0..10).map(|i| q[i * 3 + p] * q[i * 3 + r]).sum();
                let expect = if p == r { 1.0 } else { 0.0 };
                // rank-deficient inputs may produce a zero column
                let colnorm: f64 = (0..10).map(|i| q[i * 3 + p] * q[i * 3 + p]).sum();
                if colnorm > 0.5 {
                    prop_assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn jacobi_matches_nalgebra_on_random_gram() {
    // the retrieval-style oracle: an independent symmetric eigensolver
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for trial in 0..10 {
        let (n, d) = (8 + trial, 3 + trial % 3);
        let vals: Vec<f64> = (0..n * d).map(|_| next()).collect();
        let a = Matrix::dense(n, d, vals);
        let s = match gram_spectrum(&a) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let na = dmatrix_of(&a);
        let mut oracle: Vec<f64> = (na.transpose() * &na)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        oracle.sort_by(f64::total_cmp);
        for (have, want) in s.eigs.iter().zip(&oracle) {
            assert!(
                (have - want).abs() <= 1e-8 * want.abs().max(1e-8),
                "trial {trial}: {have} vs {want}"
            );
        }
    }
}

#[test]
fn least_squares_matches_full_pivot_oracle() {
    let mut state = 777u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let (n, d) = (10, 4);
    let vals: Vec<f64> = (0..n * d).map(|_| next()).collect();
    let a = Matrix::dense(n, d, vals);
    let b: Vec<f64> = (0..n).map(|_| next()).collect();
    let x = least_squares_solution(&a, &b).unwrap();

    let na = dmatrix_of(&a);
    let nb = DVector::from_column_slice(&b);
    let gram = na.transpose() * &na;
    let rhs = na.transpose() * nb;
    let oracle = gram
        .full_piv_lu()
        .solve(&rhs)
        .expect("oracle solve failed");
    for (have, want) in x.iter().zip(oracle.iter()) {
        assert!((have - want).abs() <= 1e-8 * want.abs().max(1.0));
    }
}
