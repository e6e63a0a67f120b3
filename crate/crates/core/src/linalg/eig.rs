//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

/// Eigenvalues (unsorted unless noted) and optional eigenvectors.
pub struct JacobiEig {
    pub values: Vec<f64>,
    /// Row-major `d x d`; column `j` is the eigenvector of `values[j]`.
    pub vectors: Option<Vec<f64>>,
}

/// Cyclic Jacobi on a symmetric `d x d` matrix given row-major. Sweeps until
/// the off-diagonal mass is negligible relative to the diagonal scale.
pub fn jacobi_eigh(sym: &[f64], d: usize, want_vectors: bool) -> JacobiEig {
    assert_eq!(sym.len(), d * d);
    let mut a = sym.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0; d * d];
        for i in 0..d {
            id[i * d + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    if d <= 1 {
        return JacobiEig {
            values: a.iter().step_by(d.max(1) + 1).copied().collect(),
            vectors: v,
        };
    }

    let scale: f64 = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max).max(
        a.iter().map(|x| x.abs()).fold(0.0, f64::max),
    );
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..d - 1 {
            for q in p + 1..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                if let Some(vec) = v.as_mut() {
                    for k in 0..d {
                        let vkp = vec[k * d + p];
                        let vkq = vec[k * d + q];
                        vec[k * d + p] = c * vkp - s * vkq;
                        vec[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    JacobiEig {
        values: (0..d).map(|i| a[i * d + i]).collect(),
        vectors: v,
    }
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
pub fn spectral_norm_sym(sym: &[f64], d: usize) -> f64 {
    jacobi_eigh(sym, d, false)
        .values
        .iter()
        .fold(0.0, |m, &x| m.max(x.abs()))
}

/// Row-major product `A * B` for square `d x d` matrices.
pub fn iter_mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * d..(k + 1) * d];
            let orow = &mut out[i * d..(i + 1) * d];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}
