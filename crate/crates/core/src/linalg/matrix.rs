use serde::{Deserialize, Serialize};

/// Real matrix in dense row-major or CSR storage.
///
/// CSR invariant: `indptr` is nondecreasing with length `n + 1`, and
/// `indptr[n] == indices.len() == vals.len()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Matrix {
    Dense {
        n: usize,
        d: usize,
        vals: Vec<f64>,
    },
    Csr {
        n: usize,
        d: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// Borrowed view of one row. `cols` is `None` for dense rows, where `vals`
/// covers every column in order.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub cols: Option<&'a [usize]>,
    pub vals: &'a [f64],
}

impl<'a> RowView<'a> {
    pub fn dot(&self, x: &[f64]) -> f64 {
        match self.cols {
            None => self.vals.iter().zip(x).map(|(a, b)| a * b).sum(),
            Some(cols) => cols
                .iter()
                .zip(self.vals)
                .map(|(&c, &v)| v * x[c])
                .sum(),
        }
    }

    /// `out += scale * row`
    pub fn axpy(&self, scale: f64, out: &mut [f64]) {
        match self.cols {
            None => {
                for (o, &v) in out.iter_mut().zip(self.vals) {
                    *o += scale * v;
                }
            }
            Some(cols) => {
                for (&c, &v) in cols.iter().zip(self.vals) {
                    out[c] += scale * v;
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }
}

impl Matrix {
    pub fn dense(n: usize, d: usize, vals: Vec<f64>) -> Self {
        assert_eq!(vals.len(), n * d, "dense storage size mismatch");
        Matrix::Dense { n, d, vals }
    }

    pub fn csr(n: usize, d: usize, indptr: Vec<usize>, indices: Vec<usize>, vals: Vec<f64>) -> Self {
        assert_eq!(indptr.len(), n + 1);
        assert_eq!(*indptr.last().unwrap(), vals.len());
        assert_eq!(indices.len(), vals.len());
        debug_assert!(indptr.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(indices.iter().all(|&c| c < d));
        Matrix::Csr {
            n,
            d,
            indptr,
            indices,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense { n, .. } | Matrix::Csr { n, .. } => *n,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense { d, .. } | Matrix::Csr { d, .. } => *d,
        }
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        match self {
            Matrix::Dense { d, vals, .. } => RowView {
                cols: None,
                vals: &vals[i * d..(i + 1) * d],
            },
            Matrix::Csr {
                indptr,
                indices,
                vals,
                ..
            } => {
                let (lo, hi) = (indptr[i], indptr[i + 1]);
                RowView {
                    cols: Some(&indices[lo..hi]),
                    vals: &vals[lo..hi],
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        for i in 0..self.nrows() {
            out[i] = self.row(i).dot(x);
        }
    }

    /// `A^T y`
    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        self.matvec_transpose_into(y, &mut out);
        out
    }

    pub fn matvec_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows());
        out.fill(0.0);
        for i in 0..self.nrows() {
            self.row(i).axpy(y[i], out);
        }
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row(i).norm_sq()).collect()
    }

    pub fn frob_sq(&self) -> f64 {
        match self {
            Matrix::Dense { vals, .. } | Matrix::Csr { vals, .. } => {
                vals.iter().map(|v| v * v).sum()
            }
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense { vals, .. } => vals.iter().filter(|v| **v != 0.0).count(),
            Matrix::Csr { vals, .. } => vals.len(),
        }
    }

    /// Explicit `d x d` Gram matrix `A^T A`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let d = self.ncols();
        let mut g = vec![0.0; d * d];
        match self {
            Matrix::Dense { n, vals, .. } => {
                for i in 0..*n {
                    let row = &vals[i * d..(i + 1) * d];
                    for (j, &rj) in row.iter().enumerate() {
                        if rj == 0.0 {
                            continue;
                        }
                        let grow = &mut g[j * d..(j + 1) * d];
                        for (gk, &rk) in grow.iter_mut().zip(row) {
                            *gk += rj * rk;
                        }
                    }
                }
            }
            Matrix::Csr {
                n,
                indptr,
                indices,
                vals,
                ..
            } => {
                for i in 0..*n {
                    let (lo, hi) = (indptr[i], indptr[i + 1]);
                    for a in lo..hi {
                        let (ca, va) = (indices[a], vals[a]);
                        for b in lo..hi {
                            g[ca * d + indices[b]] += va * vals[b];
                        }
                    }
                }
            }
        }
        g
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Matrix::Dense { .. } => self.clone(),
            Matrix::Csr { n, d, .. } => {
                let mut vals = vec![0.0; n * d];
                for i in 0..*n {
                    let row = self.row(i);
                    if let Some(cols) = row.cols {
                        for (&c, &v) in cols.iter().zip(row.vals) {
                            vals[i * d + c] = v;
                        }
                    }
                }
                Matrix::dense(*n, *d, vals)
            }
        }
    }

    /// CSR copy of a dense matrix (keeps explicit zeros out).
    pub fn to_csr(&self) -> Matrix {
        match self {
            Matrix::Csr { .. } => self.clone(),
            Matrix::Dense { n, d, vals } => {
                let mut indptr = Vec::with_capacity(n + 1);
                let mut indices = Vec::new();
                let mut out = Vec::new();
                indptr.push(0);
                for i in 0..*n {
                    for j in 0..*d {
                        let v = vals[i * d + j];
                        if v != 0.0 {
                            indices.push(j);
                            out.push(v);
                        }
                    }
                    indptr.push(out.len());
                }
                Matrix::csr(*n, *d, indptr, indices, out)
            }
        }
    }
}
