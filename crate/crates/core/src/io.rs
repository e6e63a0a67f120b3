//! MatrixMarket coordinate I/O, problem directories (matrix + JSON
//! sidecar), and run-trace CSV emission.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SpectrumSummary};
use crate::problems::ProblemInstance;
use crate::solvers::RunTrace;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix_market<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let row = a.row(i);
        match row.cols {
            Some(cols) => {
                for (&c, &v) in cols.iter().zip(row.vals) {
                    writeln!(w, "{} {} {:e}", i + 1, c + 1, v)?;
                }
            }
            None => {
                for (c, &v) in row.vals.iter().enumerate() {
                    if v != 0.0 {
                        writeln!(w, "{} {} {:e}", i + 1, c + 1, v)?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Matrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    if !header.trim().eq_ignore_ascii_case(MM_HEADER) {
        return Err(Error::Parse(format!(
            "unsupported MatrixMarket header: '{header}'"
        )));
    }
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        if dims.is_none() {
            let n: usize = parse_field(it.next(), "row count")?;
            let d: usize = parse_field(it.next(), "column count")?;
            let nnz: usize = parse_field(it.next(), "entry count")?;
            dims = Some((n, d, nnz));
            triplets.reserve(nnz);
        } else {
            let i: usize = parse_field(it.next(), "row index")?;
            let j: usize = parse_field(it.next(), "column index")?;
            let v: f64 = parse_field(it.next(), "value")?;
            triplets.push((i - 1, j - 1, v));
        }
    }
    let (n, d, nnz) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(Error::Parse(format!(
            "expected {nnz} entries, found {}",
            triplets.len()
        )));
    }
    if triplets.iter().any(|&(i, j, _)| i >= n || j >= d) {
        return Err(Error::Parse("entry index out of bounds".into()));
    }
    triplets.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut indptr = vec![0usize; n + 1];
    let mut indices = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for (i, j, v) in triplets {
        indptr[i + 1] += 1;
        indices.push(j);
        vals.push(v);
    }
    for i in 0..n {
        indptr[i + 1] += indptr[i];
    }
    Ok(Matrix::csr(n, d, indptr, indices, vals))
}

/// Everything except the matrix itself, stored as `problem.json` next to
/// `A.mtx`.
#[derive(Debug, Serialize, Deserialize)]
struct ProblemSidecar {
    b: Vec<f64>,
    x_star: Vec<f64>,
    r: Vec<f64>,
    sigma: f64,
    spectrum: SpectrumSummary,
    consistent: bool,
    generator: String,
    seed: u64,
}

pub fn write_problem(dir: &Path, p: &ProblemInstance) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut mtx = std::io::BufWriter::new(std::fs::File::create(dir.join("A.mtx"))?);
    write_matrix_market(&mut mtx, &p.a)?;
    mtx.flush()?;
    let sidecar = ProblemSidecar {
        b: p.b.clone(),
        x_star: p.x_star.clone(),
        r: p.r.clone(),
        sigma: p.sigma,
        spectrum: p.spectrum.clone(),
        consistent: p.consistent,
        generator: p.generator.clone(),
        seed: p.seed,
    };
    let value = serde_json::to_value(&sidecar)?;
    std::fs::write(dir.join("problem.json"), serde_json::to_string_pretty(&value)?)?;
    Ok(())
}

pub fn read_problem(dir: &Path) -> Result<ProblemInstance> {
    let f = std::fs::File::open(dir.join("A.mtx"))?;
    let a = read_matrix_market(BufReader::new(f))?;
    let sidecar: ProblemSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.join("problem.json"))?)?;
    if sidecar.b.len() != a.nrows() || sidecar.x_star.len() != a.ncols() {
        return Err(Error::Parse(
            "sidecar vector lengths do not match the matrix".into(),
        ));
    }
    Ok(ProblemInstance {
        a,
        b: sidecar.b,
        x_star: sidecar.x_star,
        r: sidecar.r,
        sigma: sidecar.sigma,
        spectrum: sidecar.spectrum,
        consistent: sidecar.consistent,
        generator: sidecar.generator,
        seed: sidecar.seed,
    })
}

/// CSV trace: a `#`-prefixed fingerprint comment, a header, then one row
/// per recorded iteration.
pub fn write_trace_csv<W: Write>(w: &mut W, trace: &RunTrace) -> Result<()> {
    writeln!(
        w,
        "# fingerprint={} seed={} status={:?}",
        trace.fingerprint, trace.seed, trace.status
    )?;
    match &trace.res_norms {
        Some(res) => {
            writeln!(w, "iter,err_norm,res_norm")?;
            for (k, (e, r)) in trace.err_norms.iter().zip(res).enumerate() {
                writeln!(w, "{},{:e},{:e}", k, e, r)?;
            }
        }
        None => {
            writeln!(w, "iter,err_norm")?;
            for (k, e) in trace.err_norms.iter().enumerate() {
                writeln!(w, "{},{:e}", k, e)?;
            }
        }
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{spectrum_exponential, synth_svd_problem};

    #[test]
    fn matrix_market_roundtrip() {
        let a = Matrix::dense(3, 2, vec![1.5, 0.0, 0.0, -2.25, 1e-30, 3.0]);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(MM_HEADER));
        let back = read_matrix_market(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.nrows(), 3);
        assert_eq!(back.ncols(), 2);
        let x = vec![0.3, -0.9];
        let ya = a.matvec(&x);
        let yb = back.matvec(&x);
        for (u, v) in ya.iter().zip(&yb) {
            assert_eq!(u, v, "exact value round-trip expected");
        }
    }

    #[test]
    fn bad_header_rejected() {
        let text = "%%MatrixMarket matrix array real general\n1 1 1\n1 1 2.0\n";
        assert!(read_matrix_market(std::io::Cursor::new(text.as_bytes())).is_err());
    }

    #[test]
    fn problem_directory_roundtrip() {
        let sq = spectrum_exponential(4, 9.0, 0.5).unwrap();
        let p = synth_svd_problem(20, 4, &sq, 77).unwrap();
        let dir = std::env::temp_dir().join(format!("mkhbm_io_test_{}", std::process::id()));
        write_problem(&dir, &p).unwrap();
        let q = read_problem(&dir).unwrap();
        assert_eq!(p.b, q.b);
        assert_eq!(p.x_star, q.x_star);
        assert_eq!(p.consistent, q.consistent);
        assert_eq!(p.spectrum.eigs, q.spectrum.eigs);
        std::fs::remove_dir_all(&dir).ok();
    }
}
