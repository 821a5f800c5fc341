//! Sparse and dense linear algebra kernels.

pub mod cholesky;
pub mod dense;
pub mod eigen;
pub mod lu;
pub mod ordering;
pub mod sparse;

pub use cholesky::SpdFactor;
pub use dense::DenseMatrix;
pub use eigen::{eigenvalues, spectral_norm, symmetric_eigen_extremes};
pub use lu::{FactorOptions, SparseLu};
pub use ordering::Ordering;
pub use sparse::SparseMatrix;

/// Euclidean inner product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
