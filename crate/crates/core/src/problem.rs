//! Coefficient scenarios and P1 assembly of the reaction-convection-diffusion
//! problem, its weighted inner product and the optional SUPG term.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundaryMarker, DofMap, Mesh};

pub type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Guard below which the SUPG term of an element is dropped.
pub const SUPG_VELOCITY_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// `a = 2π [-(y - 0.1), x - 0.5]`, divergence free.
    Rotating,
    /// `a = [-x, -y]`, divergence -2.
    Contracting,
    /// `a = [1, 0]`.
    Horizontal,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Rotating, Scenario::Contracting, Scenario::Horizontal];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Rotating => "rotating",
            Scenario::Contracting => "contracting",
            Scenario::Horizontal => "horizontal",
        }
    }

    pub fn velocity(self, [x, y]: [f64; 2]) -> [f64; 2] {
        match self {
            Scenario::Rotating => [-2.0 * PI * (y - 0.1), 2.0 * PI * (x - 0.5)],
            Scenario::Contracting => [-x, -y],
            Scenario::Horizontal => [1.0, 0.0],
        }
    }

    pub fn divergence(self) -> f64 {
        match self {
            Scenario::Contracting => -2.0,
            Scenario::Rotating | Scenario::Horizontal => 0.0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}` (expected rotating, contracting or horizontal)")))
    }
}

/// Gaussian source bumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Forcing {
    /// Centered at (0.5, 0.1).
    Center,
    /// Centered at (0.1, 0.1).
    Left,
}

impl Forcing {
    pub fn name(self) -> &'static str {
        match self {
            Forcing::Center => "center",
            Forcing::Left => "left",
        }
    }

    pub fn eval(self, [x, y]: [f64; 2]) -> f64 {
        let x0 = match self {
            Forcing::Center => 0.5,
            Forcing::Left => 0.1,
        };
        100.0 * (-10.0 * ((x - x0).powi(2) + (y - 0.1).powi(2))).exp()
    }
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Forcing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Forcing::Center),
            "left" => Ok(Forcing::Left),
            _ => Err(Error::InvalidConfig(format!("unknown forcing `{s}` (expected center or left)"))),
        }
    }
}

/// Coefficients and data of `c0 u + div(a u) - div(ν ∇u) = f`.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub c0: ScalarField,
    pub a: VectorField,
    pub div_a: ScalarField,
    pub nu: ScalarField,
    pub f: ScalarField,
    /// Robin data on Γ_R.
    pub g: ScalarField,
    /// SUPG weight θ; 0 disables stabilization.
    pub supg_theta: f64,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition").field("supg_theta", &self.supg_theta).finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    /// Preset with constant `c0` and `nu`.
    pub fn from_scenario(scenario: Scenario, c0: f64, nu: f64, forcing: Forcing, supg_theta: f64) -> Self {
        let div = scenario.divergence();
        Self {
            c0: Arc::new(move |_| c0),
            a: Arc::new(move |p| scenario.velocity(p)),
            div_a: Arc::new(move |_| div),
            nu: Arc::new(move |_| nu),
            f: Arc::new(move |p| forcing.eval(p)),
            g: Arc::new(|_| 0.0),
            supg_theta,
        }
    }

    /// `c̃ = c0 + div(a) / 2`.
    pub fn ctilde(&self, p: [f64; 2]) -> f64 {
        (self.c0)(p) + 0.5 * (self.div_a)(p)
    }

    /// Absorbing coefficient `sqrt((a·n)^2 + 4 c0 ν) / 2`. The flag is set
    /// when the radicand was negative and has been clamped to zero.
    pub fn robin_alpha(&self, p: [f64; 2], n: [f64; 2]) -> (f64, bool) {
        let a = (self.a)(p);
        let an = a[0] * n[0] + a[1] * n[1];
        let rad = an * an + 4.0 * (self.c0)(p) * (self.nu)(p);
        if rad < 0.0 {
            (0.0, true)
        } else {
            (0.5 * rad.sqrt(), false)
        }
    }

    /// Checks `ν > 0` at every vertex and compares `div_a` with central
    /// differences of `a` at seeded random points of the mesh box.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.supg_theta >= 0.0) {
            return Err(Error::InvalidProblem(format!("supg_theta must be >= 0, got {}", self.supg_theta)));
        }
        if let Some(v) = mesh.vertices().iter().find(|&&v| !((self.nu)(v) > 0.0)) {
            return Err(Error::InvalidProblem(format!("viscosity is not positive at ({}, {})", v[0], v[1])));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eps = 1e-6;
        for _ in 0..16 {
            let p = [rng.random_range(0.0..mesh.width()), rng.random_range(0.0..mesh.height())];
            let ax = |dx: f64| (self.a)([p[0] + dx, p[1]])[0];
            let ay = |dy: f64| (self.a)([p[0], p[1] + dy])[1];
            let fd = (ax(eps) - ax(-eps) + ay(eps) - ay(-eps)) / (2.0 * eps);
            let exact = (self.div_a)(p);
            if (fd - exact).abs() > 1e-4 * (1.0 + exact.abs()) {
                return Err(Error::InvalidProblem(format!(
                    "div_a = {exact} disagrees with finite differences ({fd}) at ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }
}

/// Local matrices of one triangle: `a` realizes the bilinear form (plus
/// SUPG when active), `f` the weighted inner product; row = test function.
#[derive(Debug, Clone, Copy, Default)]
pub struct ElementContribution {
    pub a: [[f64; 3]; 3],
    pub f: [[f64; 3]; 3],
    pub rhs: [f64; 3],
}

fn p1_mass(area: f64, i: usize, k: usize) -> f64 {
    if i == k {
        area / 6.0
    } else {
        area / 12.0
    }
}

/// Galerkin contribution of element `t`, coefficients frozen at the
/// barycenter; the load is `f` interpolated at the vertices.
pub fn element_galerkin(mesh: &Mesh, pd: &ProblemDefinition, t: usize) -> ElementContribution {
    let g = mesh.geometry(t);
    let b = g.barycenter;
    let ct = pd.ctilde(b);
    let nu = (pd.nu)(b);
    let a = (pd.a)(b);
    let adg: [f64; 3] = std::array::from_fn(|k| a[0] * g.grads[k][0] + a[1] * g.grads[k][1]);
    let tri = mesh.triangles()[t];
    let fv: [f64; 3] = std::array::from_fn(|k| (pd.f)(mesh.vertices()[tri[k]]));
    let mut out = ElementContribution::default();
    for i in 0..3 {
        for k in 0..3 {
            let m = p1_mass(g.area, i, k);
            let stiff = nu * (g.grads[i][0] * g.grads[k][0] + g.grads[i][1] * g.grads[k][1]) * g.area;
            let conv = 0.5 * (adg[k] - adg[i]) * g.area / 3.0;
            out.f[i][k] = ct * m + stiff;
            out.a[i][k] = out.f[i][k] + conv;
            out.rhs[i] += m * fv[k];
        }
    }
    out
}

/// SUPG contribution of element `t`; zero when θ = 0 or `|a|` at the
/// barycenter is below the guard.
pub fn element_supg(mesh: &Mesh, pd: &ProblemDefinition, t: usize) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut s = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    if pd.supg_theta == 0.0 {
        return (s, r);
    }
    let g = mesh.geometry(t);
    let b = g.barycenter;
    let a = (pd.a)(b);
    let speed = a[0].hypot(a[1]);
    if speed < SUPG_VELOCITY_GUARD {
        return (s, r);
    }
    let tau = pd.supg_theta * g.diameter / speed;
    let dv = (pd.div_a)(b);
    // L u = σ u + a·∇u on P1, L_SS v = (div a / 2) v + a·∇v
    let sigma = (pd.c0)(b) + dv;
    let fb = (pd.f)(b);
    let adg: [f64; 3] = std::array::from_fn(|k| a[0] * g.grads[k][0] + a[1] * g.grads[k][1]);
    let third = g.area / 3.0;
    for i in 0..3 {
        for k in 0..3 {
            s[i][k] = tau
                * (sigma * 0.5 * dv * p1_mass(g.area, i, k)
                    + sigma * adg[i] * third
                    + 0.5 * dv * adg[k] * third
                    + adg[k] * adg[i] * g.area);
        }
        r[i] = tau * fb * (0.5 * dv * third + adg[i] * g.area);
    }
    (s, r)
}

/// Galerkin plus SUPG contribution of element `t`.
pub fn element_contribution(mesh: &Mesh, pd: &ProblemDefinition, t: usize) -> ElementContribution {
    let mut c = element_galerkin(mesh, pd, t);
    if pd.supg_theta > 0.0 {
        let (s, r) = element_supg(mesh, pd, t);
        for i in 0..3 {
            for k in 0..3 {
                c.a[i][k] += s[i][k];
            }
            c.rhs[i] += r[i];
        }
    }
    c
}

/// Robin term `∫_e α u v` on an oriented edge, with α at the midpoint:
/// `(matrix, clamped)`.
pub fn robin_edge_matrix(mesh: &Mesh, pd: &ProblemDefinition, edge: [usize; 2]) -> ([[f64; 2]; 2], bool) {
    let (n, len) = mesh.edge_normal(edge);
    let (p, q) = (mesh.vertices()[edge[0]], mesh.vertices()[edge[1]]);
    let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let (alpha, clamped) = pd.robin_alpha(mid, n);
    let d = alpha * len / 3.0;
    let o = alpha * len / 6.0;
    ([[d, o], [o, d]], clamped)
}

/// Symmetric elimination: drops Dirichlet rows and columns and puts a unit
/// on their diagonal.
pub fn eliminate_dirichlet(n: usize, triplets: &mut Vec<(usize, usize, f64)>, dirichlet: &[bool]) {
    triplets.retain(|&(i, j, _)| !dirichlet[i] && !dirichlet[j]);
    triplets.extend((0..n).filter(|&i| dirichlet[i]).map(|i| (i, i, 1.0)));
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: SparseMatrix,
    /// Weighted inner product `(u, v)_{1,c}`.
    pub f: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
    /// False when `c̃ <= 0` at some element: `f` is then not a norm.
    pub weighted_norm_valid: bool,
    /// Some Robin coefficient had a negative radicand.
    pub alpha_clamped: bool,
}

pub fn assemble_global(mesh: &Mesh, pd: &ProblemDefinition) -> Result<AssembledSystem> {
    pd.validate(mesh)?;
    let n = mesh.num_vertices();
    let dof_map = DofMap::new(mesh);
    let mut ta = Vec::with_capacity(9 * mesh.num_triangles());
    let mut tf = Vec::with_capacity(9 * mesh.num_triangles());
    let mut rhs = vec![0.0; n];
    let mut valid = true;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = element_contribution(mesh, pd, t);
        valid &= pd.ctilde(mesh.geometry(t).barycenter) > 0.0;
        for i in 0..3 {
            for k in 0..3 {
                ta.push((tri[i], tri[k], c.a[i][k]));
                tf.push((tri[i], tri[k], c.f[i][k]));
            }
            rhs[tri[i]] += c.rhs[i];
        }
    }
    let mut clamped = false;
    for e in mesh.boundary_edges().iter().filter(|e| e.marker == BoundaryMarker::Robin) {
        let (m, cl) = robin_edge_matrix(mesh, pd, e.vertices);
        clamped |= cl;
        let (p, q) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let half = 0.5 * (pd.g)(mid) * mesh.edge_normal(e.vertices).1;
        for r in 0..2 {
            for c in 0..2 {
                ta.push((e.vertices[r], e.vertices[c], m[r][c]));
            }
            rhs[e.vertices[r]] += half;
        }
    }
    let dir = dof_map.dirichlet_flags();
    eliminate_dirichlet(n, &mut ta, dir);
    eliminate_dirichlet(n, &mut tf, dir);
    for (i, r) in rhs.iter_mut().enumerate() {
        if dir[i] {
            *r = 0.0;
        }
    }
    Ok(AssembledSystem {
        a: SparseMatrix::from_triplets(n, n, &ta)?,
        f: SparseMatrix::from_triplets(n, n, &tf)?,
        rhs,
        dof_map,
        weighted_norm_valid: valid,
        alpha_clamped: clamped,
    })
}

/// Global SUPG matrix and load contributions (before Dirichlet elimination).
pub fn assemble_supg(mesh: &Mesh, pd: &ProblemDefinition) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = mesh.num_vertices();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (s, r) = element_supg(mesh, pd, t);
        for i in 0..3 {
            for k in 0..3 {
                if s[i][k] != 0.0 {
                    trip.push((tri[i], tri[k], s[i][k]));
                }
            }
            rhs[tri[i]] += r[i];
        }
    }
    Ok((SparseMatrix::from_triplets(n, n, &trip)?, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{symmetric_eigen_extremes, SparseLu};

    fn constant(c0: f64, a: [f64; 2], nu: f64) -> ProblemDefinition {
        ProblemDefinition {
            c0: Arc::new(move |_| c0),
            a: Arc::new(move |_| a),
            div_a: Arc::new(|_| 0.0),
            nu: Arc::new(move |_| nu),
            f: Arc::new(|_| 0.0),
            g: Arc::new(|_| 0.0),
            supg_theta: 0.0,
        }
    }

    #[test]
    fn ctilde_examples() {
        let p = [0.3, 0.05];
        let con = ProblemDefinition::from_scenario(Scenario::Contracting, 1.0, 1.0, Forcing::Center, 0.0);
        assert_eq!(con.ctilde(p), 0.0);
        let rot = ProblemDefinition::from_scenario(Scenario::Rotating, 1.0, 1.0, Forcing::Center, 0.0);
        assert_eq!(rot.ctilde(p), 1.0);
        let hor = ProblemDefinition::from_scenario(Scenario::Horizontal, 0.001, 1.0, Forcing::Center, 0.0);
        assert_eq!(hor.ctilde(p), 0.001);
    }

    #[test]
    fn robin_alpha_examples() {
        let p = [0.0, 0.0];
        assert_eq!(constant(1.0, [0.0, 1.0], 1.0).robin_alpha(p, [1.0, 0.0]), (1.0, false));
        assert_eq!(constant(0.0, [3.0, 0.0], 1.0).robin_alpha(p, [-1.0, 0.0]), (1.5, false));
        let (v, _) = constant(1.0, [1.0, 0.0], 0.001).robin_alpha(p, [1.0, 0.0]);
        assert!((v - 1.004f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((v - 0.5010).abs() < 1e-4);
        assert_eq!(constant(-1.0, [0.0, 0.0], 1.0).robin_alpha(p, [1.0, 0.0]), (0.0, true));
    }

    #[test]
    fn reference_triangle_stiffness() {
        // reference element (0,0), (1,0), (0,1)
        let grads = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let area = 0.5;
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for k in 0..3 {
                let s: f64 = area * (grads[i][0] * grads[k][0] + grads[i][1] * grads[k][1]);
                assert!((s - expect[i][k]).abs() < 1e-15);
            }
        }
        // mesh triangle (0,0), (1,0), (1,1): same shape, vertices relabelled
        let mesh = Mesh::rectangle(1.0, 1.0, 1, 1).unwrap();
        let c = element_galerkin(&mesh, &constant(0.0, [0.0, 0.0], 1.0), 0);
        let mirrored = [[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]];
        for i in 0..3 {
            for k in 0..3 {
                assert!((c.a[i][k] - mirrored[i][k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn no_convection_gives_symmetric_a_equal_to_f() {
        let mesh = Mesh::rectangle(0.6, 0.2, 12, 4).unwrap();
        let sys = assemble_global(&mesh, &constant(1.0, [0.0, 0.0], 0.5)).unwrap();
        let diff = sys.a.linear_combination(1.0, &sys.f, -1.0).unwrap();
        assert_eq!(diff.max_abs(), 0.0);
        let asym = sys.a.linear_combination(1.0, &sys.a.transpose(), -1.0).unwrap();
        assert!(asym.max_abs() < 1e-15);
    }

    #[test]
    fn coercivity_identity_rotating() {
        let mesh = Mesh::rectangle(1.0, 0.2, 50, 10).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Rotating, 1.0, 1.0, Forcing::Center, 0.0);
        let sys = assemble_global(&mesh, &pd).unwrap();
        let diff = sys.a.symmetric_part().linear_combination(1.0, &sys.f, -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-12 * sys.f.max_abs());
        assert!(sys.weighted_norm_valid);
        let asym = sys.a.linear_combination(1.0, &sys.a.transpose(), -1.0).unwrap();
        assert!(asym.max_abs() > 1e-3);
    }

    #[test]
    fn robin_boundary_adds_psd_mass() {
        let mesh = Mesh::rectangle(0.4, 0.2, 6, 3).unwrap().classify_boundary(|x, _| x > 0.39);
        let pd = ProblemDefinition::from_scenario(Scenario::Horizontal, 1.0, 0.01, Forcing::Center, 0.0);
        let sys = assemble_global(&mesh, &pd).unwrap();
        let diff = sys.a.symmetric_part().linear_combination(1.0, &sys.f, -1.0).unwrap().to_dense();
        let (lo, hi) = symmetric_eigen_extremes(&diff).unwrap();
        assert!(lo > -1e-14 && hi > 0.0);
    }

    #[test]
    fn f_is_spd_when_ctilde_positive() {
        let mesh = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Rotating, 0.001, 0.001, Forcing::Center, 0.0);
        let sys = assemble_global(&mesh, &pd).unwrap();
        let (lo, _) = symmetric_eigen_extremes(&sys.f.to_dense()).unwrap();
        assert!(lo > 0.0);
    }

    #[test]
    fn contracting_unit_reaction_flags_weighted_norm() {
        let mesh = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Contracting, 1.0, 1.0, Forcing::Center, 0.0);
        assert!(!assemble_global(&mesh, &pd).unwrap().weighted_norm_valid);
    }

    #[test]
    fn dirichlet_rows_are_unit() {
        let mesh = Mesh::rectangle(0.4, 0.2, 4, 2).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Rotating, 1.0, 1.0, Forcing::Center, 0.15);
        let sys = assemble_global(&mesh, &pd).unwrap();
        for i in 0..mesh.num_vertices() {
            if sys.dof_map.is_dirichlet(i) {
                for m in [&sys.a, &sys.f] {
                    let (cols, vals) = m.row(i);
                    assert_eq!(cols, &[i]);
                    assert_eq!(vals, &[1.0]);
                }
                assert_eq!(sys.rhs[i], 0.0);
            }
        }
    }

    #[test]
    fn supg_examples() {
        let mesh = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let off = ProblemDefinition::from_scenario(Scenario::Horizontal, 1.0, 0.001, Forcing::Center, 0.0);
        let (s, r) = assemble_supg(&mesh, &off).unwrap();
        assert_eq!(s.nnz(), 0);
        assert!(r.iter().all(|&v| v == 0.0));

        let mut still = constant(1.0, [0.0, 0.0], 1.0);
        still.supg_theta = 0.15;
        let (s, r) = assemble_supg(&mesh, &still).unwrap();
        assert_eq!(s.nnz(), 0);
        assert!(r.iter().all(|&v| v == 0.0));

        let on = ProblemDefinition::from_scenario(Scenario::Horizontal, 1.0, 0.001, Forcing::Center, 0.15);
        let (s, _) = assemble_supg(&mesh, &on).unwrap();
        assert!(s.nnz() > 0);
        assert!(s.linear_combination(1.0, &s.transpose(), -1.0).unwrap().max_abs() > 1e-8);
    }

    #[test]
    fn supg_system_factorizes_on_full_mesh() {
        let mesh = Mesh::rectangle(1.0, 0.2, 300, 60).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Horizontal, 1.0, 0.001, Forcing::Center, 0.15);
        let sys = assemble_global(&mesh, &pd).unwrap();
        assert!(SparseLu::factorize(&sys.a).is_ok());
    }

    #[test]
    fn supg_matches_streamline_quadrature() {
        // brute-force check of the element SUPG matrix with a 3-point edge
        // midpoint rule, exact for the quadratic integrands involved
        let mesh = Mesh::rectangle(0.3, 0.2, 3, 2).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Contracting, 0.7, 0.01, Forcing::Left, 0.2);
        for t in 0..mesh.num_triangles() {
            let g = mesh.geometry(t);
            let b = g.barycenter;
            let a = (pd.a)(b);
            let tau = pd.supg_theta * g.diameter / a[0].hypot(a[1]);
            let dv = (pd.div_a)(b);
            let sigma = (pd.c0)(b) + dv;
            let mids = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
            let (s, _) = element_supg(&mesh, &pd, t);
            for i in 0..3 {
                for k in 0..3 {
                    let adg = |m: usize| a[0] * g.grads[m][0] + a[1] * g.grads[m][1];
                    let q: f64 = mids
                        .iter()
                        .map(|l| (sigma * l[k] + adg(k)) * (0.5 * dv * l[i] + adg(i)) * g.area / 3.0)
                        .sum();
                    assert!((s[i][k] - tau * q).abs() < 1e-13, "{} vs {}", s[i][k], tau * q);
                }
            }
        }
    }

    #[test]
    fn zero_forcing_gives_zero_rhs() {
        let mesh = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let sys = assemble_global(&mesh, &constant(1.0, [1.0, 0.5], 1.0)).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scenario_names_roundtrip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("spiral".parse::<Scenario>().is_err());
    }

    #[test]
    fn inconsistent_divergence_is_rejected() {
        let mesh = Mesh::rectangle(0.4, 0.2, 4, 2).unwrap();
        let mut pd = ProblemDefinition::from_scenario(Scenario::Contracting, 1.0, 1.0, Forcing::Center, 0.0);
        pd.div_a = Arc::new(|_| 0.0);
        assert!(matches!(assemble_global(&mesh, &pd), Err(Error::InvalidProblem(_))));
    }
}
