//! Banded Cholesky factorization for symmetric positive definite matrices.
//!
//! With `P` the bandwidth-reducing permutation, `P M P^T = L L^T`. The
//! factor exposed to callers is `G = P^T L`, so that `M = G G^T`; every
//! weighted-norm change of variables in the crate goes through `G`.

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::ordering::{bandwidths, compute_ordering, Ordering};
use crate::linalg::sparse::SparseMatrix;

#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    perm: Vec<usize>,
    bw: usize,
    /// Row `i` holds `L[i, i-bw..=i]` (left-padded with zeros).
    rows: Vec<f64>,
}

impl SpdFactor {
    pub fn factorize(m: &SparseMatrix) -> Result<Self> {
        Self::factorize_with(m, Ordering::ReverseCuthillMcKee)
    }

    pub fn factorize_with(m: &SparseMatrix, ordering: Ordering) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
        }
        let n = m.nrows();
        let perm = compute_ordering(m, ordering);
        let (kl, ku) = bandwidths(m, &perm);
        let bw = kl.max(ku);
        let w = bw + 1;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut rows = vec![0.0; n * w];
        // lower triangle of the permuted matrix, averaged with its mirror
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv[i], inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                let scale = if pi == pj { 1.0 } else { 0.5 };
                rows[r * w + bw - (r - c)] += scale * v;
            }
        }

        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = rows[i * w + bw - (i - j)];
                for k in jlo..j {
                    s -= rows[i * w + bw - (i - k)] * rows[j * w + bw - (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { step: i, pivot: s });
                    }
                    rows[i * w + bw] = s.sqrt();
                } else {
                    rows[i * w + bw - (i - j)] = s / rows[j * w + bw];
                }
            }
        }
        Ok(Self { n, perm, bw, rows })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (self.bw + 1) + self.bw - (i - j)]
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok(())
    }

    /// `G x = P^T (L x)`.
    pub fn apply_l(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let s: f64 = (lo..=i).map(|k| self.l(i, k) * x[k]).sum();
            out[self.perm[i]] = s;
        }
        Ok(out)
    }

    /// `G^T x = L^T (P x)`.
    pub fn apply_lt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let px: Vec<f64> = self.perm.iter().map(|&o| x[o]).collect();
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for k in lo..=i {
                out[k] += self.l(i, k) * px[i];
            }
        }
        Ok(out)
    }

    /// `G^{-1} x = L^{-1} (P x)`.
    pub fn solve_l(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| x[o]).collect();
        self.forward(&mut y);
        Ok(y)
    }

    /// `G^{-T} x = P^T (L^{-T} x)`.
    pub fn solve_lt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut y = x.to_vec();
        self.backward(&mut y);
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
        Ok(out)
    }

    /// `M^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = self.solve_l(b)?;
        self.solve_lt(&y)
    }

    fn forward(&self, y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
    }

    fn backward(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            y[i] /= self.l(i, i);
            let yi = y[i];
            let lo = i.saturating_sub(self.bw);
            for k in lo..i {
                y[k] -= self.l(i, k) * yi;
            }
        }
    }

    /// Dense copy of `G = P^T L`.
    pub fn factor_dense(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for k in lo..=i {
                g[(self.perm[i], k)] = self.l(i, k);
            }
        }
        g
    }

    /// `G^T X G^{-T}` for a dense square `X`.
    pub fn congruence(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.nrows() });
        }
        self.two_sided(x, true)
    }

    /// `G^{-1} X G^{-T}` for a dense square `X`.
    pub fn inverse_congruence(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.nrows() });
        }
        self.two_sided(x, false)
    }

    fn two_sided(&self, x: &DenseMatrix, left_is_gt: bool) -> Result<DenseMatrix> {
        let n = self.n;
        // right factor: columns of X G^{-T} are X (G^{-T} e_k)
        let mut xg = DenseMatrix::zeros(n, n);
        let xt = x.to_nalgebra();
        let mut e = vec![0.0; n];
        let mut ginv = nalgebra::DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            e[k] = 1.0;
            let c = self.solve_lt(&e)?;
            e[k] = 0.0;
            for (i, v) in c.into_iter().enumerate() {
                ginv[(i, k)] = v;
            }
        }
        let prod = &xt * &ginv;
        for i in 0..n {
            for j in 0..n {
                xg[(i, j)] = prod[(i, j)];
            }
        }
        let mut out = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let col = xg.column(j);
            let v = if left_is_gt { self.apply_lt(&col)? } else { self.solve_l(&col)? };
            out.set_column(j, &v);
        }
        Ok(out)
    }
}
