use crate::error::{Error, Result};

/// Solve `G x = rhs` for symmetric positive definite `G` (row-major `d x d`)
/// via an in-place LL^T factorization.
pub fn cholesky_solve(g: &[f64], d: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(g.len(), d * d);
    assert_eq!(rhs.len(), d);
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = g[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::SingularGram {
                        lambda_min: sum,
                        threshold: 0.0,
                    });
                }
                l[i * d + j] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    // forward: L y = rhs
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * d + k] * y[k];
        }
        y[i] = sum / l[i * d + i];
    }
    // backward: L^T x = y
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = y[i];
        for k in i + 1..d {
            sum -= l[k * d + i] * x[k];
        }
        x[i] = sum / l[i * d + i];
    }
    Ok(x)
}

/// Thin Householder QR of an `n x d` row-major matrix (`n >= d`).
///
/// Returns `Q` (`n x d`, orthonormal columns, row-major) with the sign
/// convention that the diagonal of `R` is nonnegative, which makes the
/// factorization of a fixed input unique and runs reproducible.
pub fn householder_qr(a: &[f64], n: usize, d: usize) -> Vec<f64> {
    assert!(n >= d);
    assert_eq!(a.len(), n * d);
    let mut r = a.to_vec();
    // Householder vectors stored below the diagonal plus separate heads.
    let mut betas = vec![0.0; d];
    let mut heads = vec![0.0; d];
    for k in 0..d {
        let mut norm_sq = 0.0;
        for i in k..n {
            norm_sq += r[i * d + k] * r[i * d + k];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            betas[k] = 0.0;
            heads[k] = 0.0;
            continue;
        }
        let akk = r[k * d + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        let head = akk - alpha;
        let vsq = norm_sq - akk * akk + head * head;
        betas[k] = 2.0 / vsq;
        heads[k] = head;
        r[k * d + k] = alpha;
        // apply reflector to remaining columns
        for j in k + 1..d {
            let mut dotv = head * r[k * d + j];
            for i in k + 1..n {
                dotv += r[i * d + k] * r[i * d + j];
            }
            let scale = betas[k] * dotv;
            r[k * d + j] -= scale * head;
            for i in k + 1..n {
                r[i * d + j] -= scale * r[i * d + k];
            }
        }
    }
    // accumulate Q = H_0 ... H_{d-1} applied to the first d identity columns
    let mut q = vec![0.0; n * d];
    for j in 0..d {
        q[j * d + j] = 1.0;
    }
    for k in (0..d).rev() {
        if betas[k] == 0.0 {
            continue;
        }
        let head = heads[k];
        for j in 0..d {
            let mut dotv = head * q[k * d + j];
            for i in k + 1..n {
                dotv += r[i * d + k] * q[i * d + j];
            }
            let scale = betas[k] * dotv;
            q[k * d + j] -= scale * head;
            for i in k + 1..n {
                q[i * d + j] -= scale * r[i * d + k];
            }
        }
    }
    // force R's diagonal positive by flipping the matching Q column
    for j in 0..d {
        if r[j * d + j] < 0.0 {
            for i in 0..n {
                q[i * d + j] = -q[i * d + j];
            }
        }
    }
    q
}
