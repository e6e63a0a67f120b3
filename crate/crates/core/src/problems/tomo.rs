//! Simplified 2-D parallel-beam tomography: ray/pixel-grid intersection
//! lengths via parametric (Siddon-style) traversal of a unit-pixel grid.

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::linalg::{gram_spectrum, Matrix};

/// Intersection lengths of one ray with a `g x g` unit-pixel grid spanning
/// `[0, g] x [0, g]`. The ray passes through `origin` with unit `dir`.
/// Returns (pixel index, chord length) pairs; pixel index is `iy * g + ix`.
fn trace_ray(g: usize, origin: (f64, f64), dir: (f64, f64)) -> Vec<(usize, f64)> {
    let gf = g as f64;
    let (ox, oy) = origin;
    let (ux, uy) = dir;
    let eps = 1e-12;

    // slab intersection of the parameter interval with the grid
    let mut s0 = f64::NEG_INFINITY;
    let mut s1 = f64::INFINITY;
    for (o, u) in [(ox, ux), (oy, uy)] {
        if u.abs() < eps {
            if o < 0.0 || o > gf {
                return Vec::new();
            }
        } else {
            let a = (0.0 - o) / u;
            let b = (gf - o) / u;
            s0 = s0.max(a.min(b));
            s1 = s1.min(a.max(b));
        }
    }
    if s1 <= s0 {
        return Vec::new();
    }

    // all parameter values where the ray crosses a pixel boundary
    let mut cuts = vec![s0, s1];
    for (o, u) in [(ox, ux), (oy, uy)] {
        if u.abs() < eps {
            continue;
        }
        for m in 0..=g {
            let s = (m as f64 - o) / u;
            if s > s0 + eps && s < s1 - eps {
                cuts.push(s);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    let mut out = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= eps {
            continue;
        }
        let mid = (w[0] + w[1]) / 2.0;
        let px = ox + mid * ux;
        let py = oy + mid * uy;
        let ix = px.floor() as isize;
        let iy = py.floor() as isize;
        if ix >= 0 && iy >= 0 && (ix as usize) < g && (iy as usize) < g {
            out.push((iy as usize * g + ix as usize, len));
        }
    }
    out
}

/// CSR system matrix for `n_angles` view angles (evenly spaced over a half
/// turn) and `n_detectors` parallel rays per view spanning the grid
/// diagonal. Rays that miss the grid produce empty rows, which are dropped;
/// the second return value is the number of dropped rays.
pub fn tomo_system_matrix(g: usize, n_angles: usize, n_detectors: usize) -> Result<(Matrix, usize)> {
    if g == 0 || n_angles == 0 || n_detectors == 0 {
        return Err(Error::Param(
            "tomography needs grid, angle, and detector counts >= 1".into(),
        ));
    }
    let gf = g as f64;
    let center = gf / 2.0;
    let span = gf * std::f64::consts::SQRT_2;
    let spacing = span / n_detectors as f64;

    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut vals = Vec::new();
    let mut dropped = 0usize;
    for a in 0..n_angles {
        let theta = std::f64::consts::PI * a as f64 / n_angles as f64;
        let dir = (theta.cos(), theta.sin());
        let axis = (-theta.sin(), theta.cos());
        for det in 0..n_detectors {
            let t = (det as f64 + 0.5) * spacing - span / 2.0;
            let origin = (center + t * axis.0, center + t * axis.1);
            let hits = trace_ray(g, origin, dir);
            if hits.is_empty() {
                dropped += 1;
                continue;
            }
            for (px, len) in hits {
                indices.push(px);
                vals.push(len);
            }
            indptr.push(vals.len());
        }
    }
    let n = indptr.len() - 1;
    Ok((Matrix::csr(n, g * g, indptr, indices, vals), dropped))
}

/// Deterministic piecewise-constant phantom: a large centered disk with two
/// smaller inclusions, on a `g x g` grid (row-major, `iy * g + ix`).
pub fn disk_phantom(g: usize) -> Vec<f64> {
    let gf = g as f64;
    let disks = [
        ((0.5 * gf, 0.5 * gf), 0.38 * gf, 1.0),
        ((0.62 * gf, 0.58 * gf), 0.15 * gf, -0.6),
        ((0.35 * gf, 0.40 * gf), 0.08 * gf, 0.7),
    ];
    let mut img = vec![0.0; g * g];
    for iy in 0..g {
        for ix in 0..g {
            let (cx, cy) = (ix as f64 + 0.5, iy as f64 + 0.5);
            let mut v = 0.0;
            for ((dx, dy), rad, val) in disks {
                if (cx - dx).powi(2) + (cy - dy).powi(2) <= rad * rad {
                    v += val;
                }
            }
            img[iy * g + ix] = v;
        }
    }
    img
}

/// Tomography problem with the disk phantom as planted solution. The seed
/// only tags the instance; the geometry and phantom are deterministic.
pub fn tomo_problem(g: usize, n_angles: usize, n_detectors: usize, seed: u64) -> Result<ProblemInstance> {
    let (a, _dropped) = tomo_system_matrix(g, n_angles, n_detectors)?;
    if a.nrows() < a.ncols() {
        return Err(Error::Dimension(format!(
            "tomography setup is underdetermined: {} kept rays for {} pixels",
            a.nrows(),
            a.ncols()
        )));
    }
    let x_star = disk_phantom(g);
    let spectrum = gram_spectrum(&a)?;
    let b = a.matvec(&x_star);
    let n = a.nrows();
    Ok(ProblemInstance {
        a,
        b,
        x_star,
        r: vec![0.0; n],
        sigma: 0.0,
        spectrum,
        consistent: true,
        generator: "tomo".to_string(),
        seed,
    })
}
