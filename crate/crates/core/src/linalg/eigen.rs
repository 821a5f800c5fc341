//! Dense eigenvalue helpers (backed by `nalgebra`).

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// Relative asymmetry `max|M - M^T| / max|M|`.
pub fn asymmetry(m: &DenseMatrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn symmetric_eigen_extremes(m: &DenseMatrix) -> Result<(f64, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
    }
    let asym = asymmetry(m);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if m.nrows() == 0 {
        return Ok((0.0, 0.0));
    }
    let eig = m.symmetric_part().to_nalgebra().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let a = m.to_nalgebra();
    let gram = a.transpose() * &a;
    let gram = (&gram + gram.transpose()) * 0.5;
    let top = gram.symmetric_eigenvalues().iter().copied().fold(0.0f64, f64::max);
    top.max(0.0).sqrt()
}

/// All eigenvalues of a general square matrix.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex<f64>>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
    }
    let n = m.nrows();
    let schur = nalgebra::Schur::try_new(m.to_nalgebra(), f64::EPSILON, 100 * n.max(1))
        .ok_or_else(|| Error::NoConvergence(format!("Schur iteration on a {n}x{n} matrix")))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}
