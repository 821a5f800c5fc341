//! Direct solver for general square sparse matrices: reverse Cuthill-McKee
//! reordering followed by a banded LU with partial pivoting (the classical
//! `gbtrf`/`gbtrs` pair). Below a size threshold the band is widened to the
//! full matrix, i.e. plain dense LU.

use crate::error::{Error, Result};
use crate::linalg::ordering::{bandwidths, compute_ordering, Ordering};
use crate::linalg::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy)]
pub struct FactorOptions {
    pub ordering: Ordering,
    /// Systems with at most this many unknowns are factored densely.
    pub dense_threshold: usize,
    /// Pivots with `|p| <= pivot_tolerance * max|M|` are reported singular.
    pub pivot_tolerance: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            ordering: Ordering::ReverseCuthillMcKee,
            dense_threshold: 64,
            pivot_tolerance: 1e-14,
        }
    }
}

/// Factored form `P M P^T = L U` of a square sparse matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    perm: Vec<usize>,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl SparseLu {
    pub fn factorize(m: &SparseMatrix) -> Result<Self> {
        Self::factorize_with(m, &FactorOptions::default())
    }

    pub fn factorize_with(m: &SparseMatrix, opts: &FactorOptions) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
        }
        let n = m.nrows();
        let dense = n <= opts.dense_threshold;
        let perm = if dense {
            (0..n).collect()
        } else {
            compute_ordering(m, opts.ordering)
        };
        let (kl, ku) = if dense {
            let w = n.saturating_sub(1);
            (w, w)
        } else {
            bandwidths(m, &perm)
        };
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut lu = Self { n, perm, kl, kv, ldab, ab: vec![0.0; ldab * n], ipiv: vec![0; n] };
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let idx = lu.at(inv[i], inv[j]);
                lu.ab[idx] = v;
            }
        }
        let threshold = opts.pivot_tolerance * m.max_abs();
        lu.factor_band(threshold)?;
        Ok(lu)
    }

    /// Storage offset of entry `(r, c)` of the permuted matrix.
    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        (self.kv + r - c) + c * self.ldab
    }

    fn factor_band(&mut self, threshold: f64) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kv;
        let ku = kv - kl;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.ab[self.at(j, j)].abs();
            for p in 1..=km {
                let v = self.ab[self.at(j + p, j)].abs();
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            self.ipiv[j] = j + jp;
            if best <= threshold || best == 0.0 {
                return Err(Error::Singular { step: j, pivot: self.ab[self.at(j + jp, j)] });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.at(j + jp, c);
                    let b = self.at(j, c);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv_piv = 1.0 / self.ab[self.at(j, j)];
                let base = self.at(j, j);
                for p in 1..=km {
                    self.ab[base + p] *= inv_piv;
                }
                for c in (j + 1)..=ju {
                    let ujc = self.ab[self.at(j, c)];
                    if ujc == 0.0 {
                        continue;
                    }
                    let col = self.at(j, c);
                    for p in 1..=km {
                        self.ab[col + p] -= self.ab[base + p] * ujc;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth of the reordered matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.kv - self.kl)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.len() });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Overwrites `b` with `M^{-1} b`; panics on dimension mismatch.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "solve: wrong right-hand side length");
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n.saturating_sub(1) {
            let l = self.ipiv[j];
            if l != j {
                y.swap(l, j);
            }
            let yj = y[j];
            if yj != 0.0 {
                let base = self.at(j, j);
                let lm = self.kl.min(n - 1 - j);
                for p in 1..=lm {
                    y[j + p] -= self.ab[base + p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let base = j * self.ldab;
            y[j] /= self.ab[base + self.kv];
            let yj = y[j];
            if yj != 0.0 {
                let lo = j.saturating_sub(self.kv);
                for i in lo..j {
                    y[i] -= self.ab[base + self.kv + i - j] * yj;
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}
