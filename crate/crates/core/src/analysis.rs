//! Numerical checks of the convergence theory: geometric and coefficient
//! constants, the theorem bounds, assumption checks, and the weighted norm
//! and field-of-values distance of the preconditioned operator.
//!
//! All weighted quantities are computed on the free (non-Dirichlet) dofs.
//! With symmetric elimination the Dirichlet block of `M^{-1} A` decouples
//! and carries no information about the method.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decomposition::{Decomposition, LocalSystem};
use crate::error::{Error, Result};
use crate::experiment::{Pipeline, RunConfig};
use crate::linalg::{spectral_norm, symmetric_eigen_extremes, DenseMatrix, SparseMatrix, SpdFactor};
use crate::mesh::{BoundaryMarker, Mesh};
use crate::problem::{AssembledSystem, ProblemDefinition};

/// Constants the theory leaves symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericConstants {
    pub c_pi: f64,
    pub c_inv: f64,
    pub c_tr: f64,
    /// `None`: use the value measured on the built partition of unity.
    pub c_dpu: Option<f64>,
    pub r: u32,
    pub d: u32,
}

impl Default for GenericConstants {
    fn default() -> Self {
        Self { c_pi: 1.0, c_inv: 12.0, c_tr: 2.0, c_dpu: None, r: 2, d: 2 }
    }
}

/// `c(r, d) = max_{|γ| = r} Σ_{0 < β <= γ} binom(γ, β)`, by enumeration.
pub fn c_of_rd(r: u32, d: u32) -> u64 {
    fn binom(n: u32, k: u32) -> u64 {
        (0..k).fold(1u64, |acc, i| acc * u64::from(n - i) / u64::from(i + 1))
    }
    fn gammas(r: u32, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if d == 1 {
            prefix.push(r);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for g in 0..=r {
            prefix.push(g);
            gammas(r - g, d - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    gammas(r, d.max(1), &mut Vec::new(), &mut all);
    all.iter()
        .map(|gamma| {
            // Σ over all β <= γ of Π binom(γ_i, β_i), minus the β = 0 term
            let mut total = 0u64;
            let mut beta = vec![0u32; gamma.len()];
            loop {
                total += gamma.iter().zip(&beta).map(|(&g, &b)| binom(g, b)).product::<u64>();
                let mut i = 0;
                while i < beta.len() && beta[i] == gamma[i] {
                    beta[i] = 0;
                    i += 1;
                }
                if i == beta.len() {
                    break;
                }
                beta[i] += 1;
            }
            total - 1
        })
        .max()
        .unwrap_or(0)
}

/// `(Λ0 with self, Λ0 without self, Λ1)`: largest number of subdomains
/// sharing a dof with a given one, and largest element multiplicity.
pub fn geometric_constants(dec: &Decomposition, num_elements: usize) -> (usize, usize, usize) {
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); dec.num_dofs];
    for (j, sd) in dec.subdomains.iter().enumerate() {
        for &g in &sd.dofs {
            owners[g].push(j);
        }
    }
    let mut lambda0 = 0;
    for sd in &dec.subdomains {
        let mut nb: Vec<usize> = sd.dofs.iter().flat_map(|&g| owners[g].iter().copied()).collect();
        nb.sort_unstable();
        nb.dedup();
        lambda0 = lambda0.max(nb.len());
    }
    let mut mult = vec![0usize; num_elements];
    for sd in &dec.subdomains {
        for &t in &sd.elements {
            mult[t] += 1;
        }
    }
    let lambda1 = mult.into_iter().max().unwrap_or(0);
    (lambda0, lambda0.saturating_sub(1), lambda1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub ctilde_plus: f64,
    pub ctilde_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub a_inf: f64,
    pub alpha_inf: f64,
    /// Subdomain diameter.
    pub h_sub: f64,
    /// `c̃_- > 0`, i.e. the weighted norm exists on the subdomain.
    pub valid: bool,
}

/// Extremes over the vertices and element barycenters of subdomain `j`;
/// `α` over the midpoints of its Robin edges.
pub fn coefficient_bounds(mesh: &Mesh, pd: &ProblemDefinition, dec: &Decomposition, j: usize) -> CoefficientBounds {
    let sd = &dec.subdomains[j];
    let points = sd
        .dofs
        .iter()
        .map(|&v| mesh.vertices()[v])
        .chain(sd.elements.iter().map(|&t| mesh.geometry(t).barycenter));
    let (mut cp, mut cm, mut np, mut nm, mut ai) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for p in points {
        let ct = pd.ctilde(p);
        let nu = (pd.nu)(p);
        let a = (pd.a)(p);
        cp = cp.max(ct);
        cm = cm.min(ct);
        np = np.max(nu);
        nm = nm.min(nu);
        ai = ai.max(a[0].hypot(a[1]));
    }
    let elems: std::collections::HashSet<usize> = sd.elements.iter().copied().collect();
    let robin_outer = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.marker == BoundaryMarker::Robin && elems.contains(&e.element))
        .map(|e| e.vertices);
    let mut alpha = 0.0f64;
    for e in sd.interface_edges.iter().copied().chain(robin_outer) {
        let (n, _) = mesh.edge_normal(e);
        let (p, q) = (mesh.vertices()[e[0]], mesh.vertices()[e[1]]);
        alpha = alpha.max(pd.robin_alpha([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])], n).0);
    }
    // the diameter is attained on the region boundary
    let mut rim: Vec<usize> = mesh.boundary_of(&sd.elements).into_iter().flat_map(|(_, e)| e).collect();
    rim.sort_unstable();
    rim.dedup();
    let mut h_sub = 0.0f64;
    for (i, &a) in rim.iter().enumerate() {
        for &b in &rim[i + 1..] {
            let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
            h_sub = h_sub.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    CoefficientBounds {
        ctilde_plus: cp,
        ctilde_minus: cm,
        nu_plus: np,
        nu_minus: nm,
        a_inf: ai,
        alpha_inf: alpha,
        h_sub,
        valid: cm > 0.0 && nm > 0.0,
    }
}

/// Closed-form constants of one subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    pub c_stab: f64,
    pub c_err: f64,
    pub c_d: f64,
    pub c_df: f64,
    pub c_db: f64,
    pub c_cont: f64,
}

pub fn theoretical_constants(
    gc: &GenericConstants,
    c_dpu: f64,
    cb: &CoefficientBounds,
    h: f64,
    delta: f64,
) -> Result<TheoreticalConstants> {
    if !cb.valid {
        return Err(Error::WeightedNormInvalid(format!(
            "c̃ lower bound {} is not positive",
            cb.ctilde_minus
        )));
    }
    let crd = c_of_rd(gc.r, gc.d) as f64;
    let (cp, cm, np, nm) = (cb.ctilde_plus, cb.ctilde_minus, cb.nu_plus, cb.nu_minus);
    let c_err = gc.c_pi * crd * c_dpu * gc.c_inv.sqrt() * ((np / nm).sqrt() + (cp / nm).sqrt() * h) * (h / delta);
    let c_d = 2f64.sqrt() * (1.0 + c_dpu * (np / cm).sqrt() / delta) + c_err;
    let c_df = c_dpu * np / (cm * nm).sqrt() / delta + 2.0 * c_err;
    let c_cont = (cp / cm) * (np / nm)
        + 0.5 * cb.a_inf / (nm * cm).sqrt()
        + cb.alpha_inf * gc.c_tr / cm.sqrt() * (1.0 / (cb.h_sub * cm.sqrt()) + 0.5 / nm.sqrt());
    let c_db = c_dpu * (np / (cm * nm).sqrt() + cb.a_inf / cm) / delta + 2.0 * c_cont * c_err;
    Ok(TheoreticalConstants { c_stab: 1.0, c_err, c_d, c_df, c_db, c_cont })
}

/// Per-subdomain constants entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_stab: f64,
    pub c_d: f64,
    pub c_db: f64,
    pub c_df: f64,
}

impl From<TheoreticalConstants> for BoundConstants {
    fn from(t: TheoreticalConstants) -> Self {
        Self { c_stab: t.c_stab, c_d: t.c_d, c_db: t.c_db, c_df: t.c_df }
    }
}

/// `(upper, lower)` of the norm and field-of-values bounds.
pub fn theorem_bounds(lambda0: usize, lambda1: usize, cs: &[BoundConstants]) -> (f64, f64) {
    let (l0, l1) = (lambda0 as f64, lambda1 as f64);
    let max = |f: &dyn Fn(&BoundConstants) -> f64| cs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let upper = (l0 * l1).sqrt() * max(&|c| c.c_d * (c.c_stab * c.c_db + c.c_d));
    let lower = 1.0 / l0 - l1 * max(&|c| c.c_d * c.c_stab * c.c_db) - l1 * max(&|c| c.c_df * (c.c_stab * c.c_db + c.c_d));
    (upper, lower)
}

/// Measured constants of one subdomain (free local dofs, `F_j = G G^T`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// `||G^T D G^{-T}||_2`.
    pub c_d: f64,
    /// `||G^{-1} [D, B] G^{-T}||_2`.
    pub c_db: f64,
    /// `||G^{-1} [D, F] G^{-T}||_2`.
    pub c_df: f64,
    /// `1 / σ_min(G^{-1} B G^{-T})`.
    pub c_stab: f64,
    /// `max(1, δ max |∇χ_j|)`.
    pub c_dpu: f64,
}

impl From<EmpiricalConstants> for BoundConstants {
    fn from(e: EmpiricalConstants) -> Self {
        Self { c_stab: e.c_stab, c_d: e.c_d, c_db: e.c_db, c_df: e.c_df }
    }
}

/// `max(1, δ max_τ |∇ Π χ_j|)` over the elements of subdomain `j`.
pub fn empirical_c_dpu(mesh: &Mesh, dec: &Decomposition, j: usize, delta: f64) -> f64 {
    let sd = &dec.subdomains[j];
    let mut worst = 0.0f64;
    for &t in &sd.elements {
        let g = mesh.geometry(t);
        let tri = mesh.triangles()[t];
        let mut grad = [0.0; 2];
        for k in 0..3 {
            let chi = sd.pu[sd.local_index(tri[k]).expect("element vertex is a dof")];
            grad[0] += chi * g.grads[k][0];
            grad[1] += chi * g.grads[k][1];
        }
        worst = worst.max(grad[0].hypot(grad[1]));
    }
    (delta * worst).max(1.0)
}

fn local_free(loc: &LocalSystem) -> Vec<usize> {
    (0..loc.dirichlet.len()).filter(|&l| !loc.dirichlet[l]).collect()
}

pub fn empirical_constants(mesh: &Mesh, dec: &Decomposition, locals: &[LocalSystem], j: usize, cap: usize) -> Result<EmpiricalConstants> {
    let sd = &dec.subdomains[j];
    let loc = &locals[j];
    let free = local_free(loc);
    if free.len() > cap {
        return Err(Error::DenseCapExceeded { size: free.len(), cap });
    }
    let b = loc.b.principal_submatrix(&free);
    let f = loc.f.principal_submatrix(&free);
    let g = SpdFactor::factorize(&f)?;
    let d: Vec<f64> = free.iter().map(|&l| sd.pu[l]).collect();
    let dd = DenseMatrix::from_diagonal(&d);
    let bd = b.to_dense();
    let fd = f.to_dense();
    let commutator = |m: &DenseMatrix| {
        let mut c = DenseMatrix::zeros(d.len(), d.len());
        for r in 0..d.len() {
            for k in 0..d.len() {
                c[(r, k)] = (d[r] - d[k]) * m[(r, k)];
            }
        }
        c
    };
    let c_d = spectral_norm(&g.congruence(&dd)?);
    let c_db = spectral_norm(&g.inverse_congruence(&commutator(&bd))?);
    let c_df = spectral_norm(&g.inverse_congruence(&commutator(&fd))?);
    let bt = g.inverse_congruence(&bd)?.to_nalgebra();
    let smin = (bt.transpose() * &bt).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
    let delta = 2.0 * dec.overlap_layers as f64 * mesh.h();
    Ok(EmpiricalConstants {
        c_d,
        c_db,
        c_df,
        c_stab: 1.0 / smin,
        c_dpu: empirical_c_dpu(mesh, dec, j, delta),
    })
}

/// Result of the rotation sweep over the numerical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovResult {
    pub distance: f64,
    /// No direction separates the range from the origin.
    pub origin_possibly_enclosed: bool,
    pub best_theta: f64,
    /// Angles at which an eigenproblem was actually solved.
    pub evaluated: usize,
}

/// Distance from the origin of the numerical range `{x* C x : |x| = 1}` of
/// a real matrix over complex vectors, by a sweep of `n_theta` angles.
///
/// For each angle, `λ_min` of the Hermitian part `cos θ S + i sin θ K`
/// (`S`, `K` the symmetric and skew parts of `C`) bounds `Re(e^{iθ} z)`
/// from below on the range. It is computed through the real embedding
/// `[[cS, -sK], [sK, cS]]`. With `prune`, angles whose bound
/// `min(cos θ λ_min(S), cos θ λ_max(S))` (the value on real vectors) cannot
/// beat the best value so far are skipped; this never changes the result.
pub fn fov_distance(c: &DenseMatrix, n_theta: usize, prune: bool) -> Result<FovResult> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::NotSquare { nrows: n, ncols: c.ncols() });
    }
    let s = c.symmetric_part();
    let k = c.skew_part();
    let (smin, smax) = symmetric_eigen_extremes(&s)?;
    let mut best = f64::NEG_INFINITY;
    let mut best_theta = 0.0;
    let mut evaluated = 0;
    for i in 0..n_theta.max(1) {
        let theta = 2.0 * PI * i as f64 / n_theta.max(1) as f64;
        let (sn, cs) = theta.sin_cos();
        let ub = (cs * smin).min(cs * smax);
        if prune && ub <= best.max(0.0) {
            continue;
        }
        let value = if sn.abs() < 1e-15 {
            if cs > 0.0 {
                cs * smin
            } else {
                cs * smax
            }
        } else {
            let mut h = DenseMatrix::zeros(2 * n, 2 * n);
            for r in 0..n {
                for q in 0..n {
                    h[(r, q)] = cs * s[(r, q)];
                    h[(r + n, q + n)] = cs * s[(r, q)];
                    h[(r, q + n)] = -sn * k[(r, q)];
                    h[(r + n, q)] = sn * k[(r, q)];
                }
            }
            symmetric_eigen_extremes(&h)?.0
        };
        evaluated += 1;
        if value > best {
            best = value;
            best_theta = theta;
        }
    }
    Ok(if best > 0.0 {
        FovResult { distance: best, origin_possibly_enclosed: false, best_theta, evaluated }
    } else {
        FovResult { distance: 0.0, origin_possibly_enclosed: true, best_theta, evaluated }
    })
}

/// `(||C||_F, fov)` for `C = M^{-1} A` in the geometry of `F = G G^T`,
/// through `Ĉ = G^T C G^{-T}`.
pub fn weighted_norm_and_fov(c: &DenseMatrix, f: &SpdFactor, n_theta: usize) -> Result<(f64, FovResult)> {
    let chat = f.congruence(c)?;
    Ok((spectral_norm(&chat), fov_distance(&chat, n_theta, true)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `max |Σ_j R_j^T D_j R_j - I|`.
    pub pu_error: f64,
    pub pu_ok: bool,
    /// Largest relative mismatch between rows of `R_j A` and `B_j R_j` on
    /// dofs where `D_j` is nonzero.
    pub row_identity_a: f64,
    pub row_identity_a_ok: bool,
    /// Same for `F` and `F_j`.
    pub row_identity_f: f64,
    pub row_identity_f_ok: bool,
    /// Smallest eigenvalue of `(B_j + B_j^T)/2 - F_j` over all subdomains,
    /// on the rows where it is nonzero; `None` when some support exceeds
    /// the dense cap.
    pub local_coercivity_min_eig: Option<f64>,
    pub local_coercivity_ok: Option<bool>,
}

impl AssumptionReport {
    /// Every check that ran passed.
    pub fn all_ok(&self) -> bool {
        self.pu_ok && self.row_identity_a_ok && self.row_identity_f_ok && self.local_coercivity_ok != Some(false)
    }
}

pub const IDENTITY_TOL: f64 = 1e-12;
pub const PU_TOL: f64 = 1e-15;

/// Largest relative difference between the rows of the global matrix and
/// of the local matrix mapped to global columns, on rows with `D_j != 0`.
pub fn row_identity_error(global: &SparseMatrix, dec: &Decomposition, local: &[&SparseMatrix]) -> f64 {
    let scale = global.max_abs().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (sd, m) in dec.subdomains.iter().zip(local) {
        for (l, &g) in sd.dofs.iter().enumerate() {
            if sd.pu[l] == 0.0 {
                continue;
            }
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            let (cols, vals) = global.row(g);
            for (&c, &v) in cols.iter().zip(vals) {
                *row.entry(c).or_default() += v;
            }
            let (cols, vals) = m.row(l);
            for (&c, &v) in cols.iter().zip(vals) {
                *row.entry(sd.dofs[c]).or_default() -= v;
            }
            worst = worst.max(row.values().fold(0.0f64, |m, v| m.max(v.abs())) / scale);
        }
    }
    worst
}

/// Partition of unity, both row identities and, when every support fits in
/// `coercivity_cap`, local coercivity.
pub fn check_assumptions(
    sys: &AssembledSystem,
    dec: &Decomposition,
    locals: &[LocalSystem],
    coercivity_cap: usize,
) -> Result<AssumptionReport> {
    let pu_error = dec.pu_sum().iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
    let bs: Vec<&SparseMatrix> = locals.iter().map(|l| &l.b).collect();
    let fs: Vec<&SparseMatrix> = locals.iter().map(|l| &l.f).collect();
    let row_identity_a = row_identity_error(&sys.a, dec, &bs);
    let row_identity_f = row_identity_error(&sys.f, dec, &fs);
    let mut min_eig = Some(f64::INFINITY);
    for loc in locals {
        let gap = loc.b.symmetric_part().linear_combination(1.0, &loc.f, -1.0)?;
        let scale = gap.max_abs();
        let support: Vec<usize> = (0..gap.nrows())
            .filter(|&i| gap.row(i).1.iter().any(|v| v.abs() > 1e-14 * scale.max(1.0)))
            .collect();
        if support.is_empty() {
            min_eig = min_eig.map(|m| m.min(0.0));
            continue;
        }
        if support.len() > coercivity_cap {
            min_eig = None;
            break;
        }
        let (lo, _) = symmetric_eigen_extremes(&gap.principal_submatrix(&support).to_dense().symmetric_part())?;
        min_eig = min_eig.map(|m| m.min(lo));
    }
    let coercivity_tol = 1e-12 * sys.f.max_abs();
    Ok(AssumptionReport {
        pu_error,
        pu_ok: pu_error <= PU_TOL,
        row_identity_a,
        row_identity_a_ok: row_identity_a <= IDENTITY_TOL,
        row_identity_f,
        row_identity_f_ok: row_identity_f <= IDENTITY_TOL,
        local_coercivity_min_eig: min_eig,
        local_coercivity_ok: min_eig.map(|m| m >= -coercivity_tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainReport {
    pub coefficients: CoefficientBounds,
    /// `None` when `c̃_- <= 0`.
    pub theoretical: Option<TheoreticalConstants>,
    pub empirical: Option<EmpiricalConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub upper_theoretical: Option<f64>,
    pub lower_theoretical: Option<f64>,
    pub upper_empirical: f64,
    pub lower_empirical: f64,
    pub empirical_norm: f64,
    pub empirical_fov_distance: f64,
    pub origin_possibly_enclosed: bool,
    pub upper_holds: bool,
    /// `None` when the lower bound is not positive (nothing to check).
    pub lower_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub lambda0: usize,
    pub lambda0_without_self: usize,
    pub lambda1: usize,
    pub c_rd: u64,
    pub h: f64,
    pub delta: f64,
    pub generic: GenericConstants,
    pub weighted_norm_valid: bool,
    pub subdomains: Vec<SubdomainReport>,
    pub assumptions: AssumptionReport,
    /// Absent when the weighted norm is invalid or the problem exceeds the
    /// dense cap.
    pub bounds: Option<BoundsReport>,
    pub notes: Vec<String>,
}

/// Full analysis of a built pipeline. The dense parts are skipped (with a
/// note) when `c̃ <= 0` somewhere or the free dof count exceeds the cap.
pub fn analyze_pipeline(pipe: &Pipeline, cfg: &RunConfig) -> Result<AnalysisReport> {
    analyze(pipe, cfg, &GenericConstants::default())
}

pub fn analyze(pipe: &Pipeline, cfg: &RunConfig, gc: &GenericConstants) -> Result<AnalysisReport> {
    let mesh = &pipe.mesh;
    let dec = &pipe.decomposition;
    let sys = &pipe.system;
    let h = mesh.h();
    let delta = 2.0 * dec.overlap_layers as f64 * h;
    let (lambda0, lambda0_without_self, lambda1) = geometric_constants(dec, mesh.num_triangles());
    let assumptions = check_assumptions(sys, dec, &pipe.locals, cfg.dense_cap)?;
    let mut notes = Vec::new();
    let free = sys.dof_map.free_dofs();
    let dense_ok = free.len() <= cfg.dense_cap;
    if !dense_ok {
        notes.push(format!("{} free dofs exceed the dense cap {}; dense analysis skipped", free.len(), cfg.dense_cap));
    }

    let mut subdomains = Vec::with_capacity(dec.len());
    for j in 0..dec.len() {
        let cb = coefficient_bounds(mesh, &pipe.problem, dec, j);
        let empirical = if cb.valid && dense_ok {
            Some(empirical_constants(mesh, dec, &pipe.locals, j, cfg.dense_cap)?)
        } else {
            None
        };
        let c_dpu = gc.c_dpu.unwrap_or_else(|| empirical_c_dpu(mesh, dec, j, delta));
        let theoretical = theoretical_constants(gc, c_dpu, &cb, h, delta).ok();
        if !cb.valid {
            notes.push(format!("subdomain {j}: c̃ lower bound {} is not positive", cb.ctilde_minus));
        }
        subdomains.push(SubdomainReport { coefficients: cb, theoretical, empirical });
    }

    let weighted_norm_valid = sys.weighted_norm_valid && subdomains.iter().all(|s| s.coefficients.valid);
    let bounds = if weighted_norm_valid && dense_ok {
        let prec = pipe.preconditioner(cfg.prec)?;
        let ma = prec.materialize(&sys.a, cfg.dense_cap)?.principal_submatrix(&free);
        let f = SpdFactor::factorize(&sys.f.principal_submatrix(&free))?;
        let (norm, fov) = weighted_norm_and_fov(&ma, &f, cfg.n_theta)?;
        let emp: Vec<BoundConstants> = subdomains.iter().filter_map(|s| s.empirical.map(Into::into)).collect();
        let (upper_e, lower_e) = theorem_bounds(lambda0, lambda1, &emp);
        let theo: Option<Vec<BoundConstants>> = subdomains.iter().map(|s| s.theoretical.map(Into::into)).collect();
        let (upper_t, lower_t) = match theo {
            Some(t) => {
                let (u, l) = theorem_bounds(lambda0, lambda1, &t);
                (Some(u), Some(l))
            }
            None => (None, None),
        };
        Some(BoundsReport {
            upper_theoretical: upper_t,
            lower_theoretical: lower_t,
            upper_empirical: upper_e,
            lower_empirical: lower_e,
            empirical_norm: norm,
            empirical_fov_distance: fov.distance,
            origin_possibly_enclosed: fov.origin_possibly_enclosed,
            upper_holds: norm <= upper_e,
            lower_holds: (lower_e > 0.0).then_some(fov.distance >= lower_e),
        })
    } else {
        if !weighted_norm_valid {
            notes.push("weighted norm invalid: norm and field of values not computed".into());
        }
        None
    };

    Ok(AnalysisReport {
        lambda0,
        lambda0_without_self,
        lambda1,
        c_rd: c_of_rd(gc.r, gc.d),
        h,
        delta,
        generic: *gc,
        weighted_norm_valid,
        subdomains,
        assumptions,
        bounds,
        notes,
    })
}
