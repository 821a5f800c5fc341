//! Full (non-restarted) right-preconditioned GMRES, in the Euclidean norm
//! or in the norm induced by an SPD matrix.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix, SparseMatrix, SpdFactor};

/// Matrix-free operator `y = Op x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Euclidean,
    Weighted,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Stop once the residual is reduced by this factor.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep every iterate `x_k` (costly; for testing).
    pub record_iterates: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 1000, record_iterates: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Minimized residual norm relative to the initial one; entry `k` after
    /// `k` iterations.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub norm: NormKind,
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
}

impl SolveReport {
    /// CSV with header `iteration,residual`.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,residual")?;
        for (k, r) in self.residual_history.iter().enumerate() {
            writeln!(w, "{k},{r:e}")?;
        }
        Ok(())
    }
}

/// Orthogonality loss (relative) above which a second Gram-Schmidt pass runs.
const REORTH_THRESHOLD: f64 = 1e-8;

/// Right-preconditioned GMRES: minimizes `||b - A M^{-1} u||_2` over the
/// Krylov space of `A M^{-1}` and returns `x = x0 + M^{-1} u`. `m` applies
/// `M^{-1}`; `None` means no preconditioning.
pub fn gmres(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
) -> Result<SolveReport> {
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if let Some(m) = m {
        if m.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
        }
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }

    let mut ax = vec![0.0; n];
    a.apply(x0, &mut ax);
    let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let beta = norm2(&r0);
    let mut report = SolveReport {
        solution: x0.to_vec(),
        iterations: 0,
        residual_history: vec![1.0],
        converged: beta == 0.0,
        norm: NormKind::Euclidean,
        iterates: if opts.record_iterates { vec![x0.to_vec()] } else { Vec::new() },
    };
    if beta == 0.0 {
        report.residual_history[0] = 0.0;
        return Ok(report);
    }

    let precondition = |v: &[f64], out: &mut [f64]| match m {
        Some(m) => m.apply(v, out),
        None => out.copy_from_slice(v),
    };

    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    // columns of the Hessenberg matrix, already rotated
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    let mut k = 0;
    while k < opts.max_iter {
        precondition(&basis[k], &mut z);
        a.apply(&z, &mut w);
        let wnorm0 = norm2(&w);
        let mut col = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
        }
        let mut wnorm = norm2(&w);
        if wnorm > 0.0 {
            let loss = basis.iter().map(|v| dot(&w, v).abs()).fold(0.0, f64::max) / wnorm;
            if loss > REORTH_THRESHOLD {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
                wnorm = norm2(&w);
            }
        }
        col[k + 1] = wnorm;
        // breakdown: the Krylov space is invariant and the solution exact
        let breakdown = wnorm <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);

        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[k].hypot(col[k + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (col[k] / r, col[k + 1] / r) };
        col[k] = r;
        col[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[k]);
        g[k] *= c;
        h.push(col);
        k += 1;

        let rel = if breakdown { 0.0 } else { g[k].abs() / beta };
        report.residual_history.push(rel);
        if opts.record_iterates {
            report.iterates.push(assemble_solution(&basis, &h, &g, k, x0, &precondition));
        }
        if rel <= opts.tol || breakdown {
            report.converged = true;
            break;
        }
        basis.push(w.iter().map(|v| v / wnorm).collect());
    }
    report.iterations = k;
    report.solution = match report.iterates.last() {
        Some(x) if opts.record_iterates => x.clone(),
        _ => assemble_solution(&basis, &h, &g, k, x0, &precondition),
    };
    Ok(report)
}

fn assemble_solution(
    basis: &[Vec<f64>],
    h: &[Vec<f64>],
    g: &[f64],
    k: usize,
    x0: &[f64],
    precondition: &dyn Fn(&[f64], &mut [f64]),
) -> Vec<f64> {
    let mut y = g[..k].to_vec();
    for i in (0..k).rev() {
        for j in (i + 1)..k {
            y[i] -= h[j][i] * y[j];
        }
        y[i] /= h[i][i];
    }
    let n = x0.len();
    let mut u = vec![0.0; n];
    for (yi, v) in y.iter().zip(basis) {
        u.iter_mut().zip(v).for_each(|(ui, vi)| *ui += yi * vi);
    }
    let mut z = vec![0.0; n];
    precondition(&u, &mut z);
    x0.iter().zip(&z).map(|(a, b)| a + b).collect()
}

/// `G^T Op G^{-T}` for `F = G G^T`.
struct Congruent<'a> {
    op: &'a dyn LinearOperator,
    g: &'a SpdFactor,
}

impl LinearOperator for Congruent<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let t = self.g.solve_lt(x).expect("dimension checked");
        let mut s = vec![0.0; t.len()];
        self.op.apply(&t, &mut s);
        y.copy_from_slice(&self.g.apply_lt(&s).expect("dimension checked"));
    }
}

/// GMRES minimizing `||r||_F = sqrt(r^T F r)`, through the change of
/// variables `x~ = G^T x` with `F = G G^T`.
pub fn weighted_gmres(
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    f: &SpdFactor,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
) -> Result<SolveReport> {
    let n = a.dim();
    if f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
    }
    let at = Congruent { op: a, g: f };
    let mt = m.map(|m| Congruent { op: m, g: f });
    let bt = f.apply_lt(b)?;
    let x0t = f.apply_lt(x0)?;
    let mut rep = gmres(&at, mt.as_ref().map(|m| m as &dyn LinearOperator), &bt, &x0t, opts)?;
    rep.solution = f.solve_lt(&rep.solution)?;
    for x in &mut rep.iterates {
        *x = f.solve_lt(x)?;
    }
    rep.norm = NormKind::Weighted;
    Ok(rep)
}
