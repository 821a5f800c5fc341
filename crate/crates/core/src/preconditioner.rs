//! One-level SORAS and ORAS preconditioners.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::{assemble_local_with, Decomposition, LocalSystem};
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::linalg::DenseMatrix;
use crate::mesh::{DofMap, Mesh};
use crate::problem::ProblemDefinition;

/// Default size cap for dense materialization.
pub const DENSE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    /// `Σ R_j^T D_j B_j^{-1} D_j R_j`.
    #[default]
    Soras,
    /// `Σ R_j^T D_j B_j^{-1} R_j`.
    Oras,
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreconditionerKind::Soras => "soras",
            PreconditionerKind::Oras => "oras",
        })
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soras" => Ok(PreconditionerKind::Soras),
            "oras" => Ok(PreconditionerKind::Oras),
            _ => Err(Error::InvalidConfig(format!("unknown preconditioner `{s}` (expected soras or oras)"))),
        }
    }
}

/// Local factors of every subdomain, `F_j` factored only on request.
pub fn assemble_locals(
    mesh: &Mesh,
    pd: &ProblemDefinition,
    dofs: &DofMap,
    dec: &Decomposition,
    factor_f: bool,
) -> Result<Vec<LocalSystem>> {
    (0..dec.len()).map(|j| assemble_local_with(mesh, pd, dofs, dec, j, factor_f)).collect()
}

#[derive(Debug, Clone)]
pub struct SchwarzPreconditioner<'a> {
    pub kind: PreconditionerKind,
    dec: &'a Decomposition,
    locals: &'a [LocalSystem],
}

impl<'a> SchwarzPreconditioner<'a> {
    pub fn new(kind: PreconditionerKind, dec: &'a Decomposition, locals: &'a [LocalSystem]) -> Result<Self> {
        if locals.len() != dec.len() {
            return Err(Error::DimensionMismatch { expected: dec.len(), found: locals.len() });
        }
        for (sd, loc) in dec.subdomains.iter().zip(locals) {
            if loc.b.nrows() != sd.num_dofs() || sd.pu.len() != sd.num_dofs() {
                return Err(Error::DimensionMismatch { expected: sd.num_dofs(), found: loc.b.nrows() });
            }
        }
        Ok(Self { kind, dec, locals })
    }

    /// Dense `M^{-1} A`, column `k` being `M^{-1} (A e_k)`.
    pub fn materialize(&self, a: &dyn LinearOperator, cap: usize) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > cap {
            return Err(Error::DenseCapExceeded { size: n, cap });
        }
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut ae = vec![0.0; n];
        let mut col = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            a.apply(&e, &mut ae);
            e[k] = 0.0;
            self.apply(&ae, &mut col);
            out.set_column(k, &col);
        }
        Ok(out)
    }
}

impl LinearOperator for SchwarzPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.dec.num_dofs
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (sd, loc) in self.dec.subdomains.iter().zip(self.locals) {
            let mut v = sd.restrict(x);
            if self.kind == PreconditionerKind::Soras {
                v.iter_mut().zip(&sd.pu).for_each(|(a, d)| *a *= d);
            }
            loc.b_factor.solve_in_place(&mut v);
            v.iter_mut().zip(&sd.pu).for_each(|(a, d)| *a *= d);
            sd.prolong_add(&v, y);
        }
    }
}
