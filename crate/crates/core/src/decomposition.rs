//! Overlapping decompositions: element partitions, overlap growth,
//! partition of unity and the local Robin problems.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SparseLu, SparseMatrix, SpdFactor};
use crate::mesh::{BoundaryMarker, DofMap, Mesh};
use crate::problem::{eliminate_dirichlet, element_contribution, robin_edge_matrix, ProblemDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partitioner {
    #[default]
    Strips,
    Greedy,
}

impl fmt::Display for Partitioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partitioner::Strips => "strips",
            Partitioner::Greedy => "greedy",
        })
    }
}

impl FromStr for Partitioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strips" => Ok(Partitioner::Strips),
            "greedy" => Ok(Partitioner::Greedy),
            _ => Err(Error::InvalidConfig(format!("unknown partitioner `{s}` (expected strips or greedy)"))),
        }
    }
}

/// Vertical strips of equal width, by element barycenter.
pub fn partition_strips(mesh: &Mesh, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > mesh.nx() {
        return Err(Error::InvalidPartition(format!(
            "strip count {n} must be between 1 and the horizontal cell count {}",
            mesh.nx()
        )));
    }
    let w = mesh.width() / n as f64;
    Ok((0..mesh.num_triangles())
        .map(|t| ((mesh.geometry(t).barycenter[0] / w) as usize).min(n - 1))
        .collect())
}

/// Seeded greedy partition into `n` edge-connected regions whose element
/// counts lie within 10% of the average.
///
/// Seeds are spread by farthest-point sampling on the dual graph from a
/// random first element, then moved a few times to the element nearest to
/// the centroid of their breadth-first region. Regions grow breadth-first
/// from the final seeds in lockstep, and a diffusion pass moves border
/// elements from larger to smaller neighbors, nearest to the receiver
/// first, without disconnecting the donor.
pub fn partition_greedy(mesh: &Mesh, n: usize, seed: u64) -> Result<Vec<usize>> {
    const RECENTER_STEPS: usize = 8;
    let ne = mesh.num_triangles();
    if n == 0 || n > ne {
        return Err(Error::InvalidPartition(format!("region count {n} must be between 1 and {ne}")));
    }
    let nbrs = mesh.edge_neighbors();
    let bary: Vec<[f64; 2]> = (0..ne).map(|t| mesh.geometry(t).barycenter).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds = vec![rng.random_range(0..ne)];
    let mut dist = vec![usize::MAX; ne];
    while seeds.len() < n {
        multi_source_bfs(&nbrs, &seeds, &mut dist);
        let far = (0..ne).max_by_key(|&t| (dist[t], std::cmp::Reverse(t))).expect("non-empty mesh");
        seeds.push(far);
    }

    let mut owner = vec![usize::MAX; ne];
    for _ in 0..RECENTER_STEPS {
        grow_regions(&nbrs, &seeds, &mut owner)?;
        let mut sum = vec![[0.0f64; 3]; n];
        for t in 0..ne {
            let c = &mut sum[owner[t]];
            c[0] += bary[t][0];
            c[1] += bary[t][1];
            c[2] += 1.0;
        }
        let centroid: Vec<[f64; 2]> = sum.iter().map(|c| [c[0] / c[2], c[1] / c[2]]).collect();
        let mut next = seeds.clone();
        let mut best = vec![f64::INFINITY; n];
        for t in 0..ne {
            let r = owner[t];
            let d = (bary[t][0] - centroid[r][0]).hypot(bary[t][1] - centroid[r][1]);
            if d < best[r] {
                best[r] = d;
                next[r] = t;
            }
        }
        if next == seeds {
            break;
        }
        seeds = next;
    }
    grow_regions(&nbrs, &seeds, &mut owner)?;
    let mut size = vec![0usize; n];
    for &r in &owner {
        size[r] += 1;
    }
    rebalance(mesh, &nbrs, &bary, &mut owner, &mut size);
    Ok(owner)
}

/// Lockstep breadth-first growth from `seeds`; ties go to the region
/// reaching an element first in queue order.
fn grow_regions(nbrs: &[Vec<usize>], seeds: &[usize], owner: &mut [usize]) -> Result<()> {
    owner.fill(usize::MAX);
    let mut q = VecDeque::new();
    for (r, &s) in seeds.iter().enumerate() {
        owner[s] = r;
        q.push_back(s);
    }
    while let Some(t) = q.pop_front() {
        for &u in &nbrs[t] {
            if owner[u] == usize::MAX {
                owner[u] = owner[t];
                q.push_back(u);
            }
        }
    }
    if owner.contains(&usize::MAX) {
        return Err(Error::InvalidPartition("mesh dual graph is disconnected".into()));
    }
    Ok(())
}

fn multi_source_bfs(nbrs: &[Vec<usize>], sources: &[usize], dist: &mut [usize]) {
    dist.fill(usize::MAX);
    let mut q = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        q.push_back(s);
    }
    while let Some(t) = q.pop_front() {
        for &u in &nbrs[t] {
            if dist[u] == usize::MAX {
                dist[u] = dist[t] + 1;
                q.push_back(u);
            }
        }
    }
}

fn is_balanced(size: &[usize], total: usize) -> bool {
    let avg = total as f64 / size.len() as f64;
    size.iter().all(|&s| (s as f64) <= 1.1 * avg && (s as f64) >= 0.9 * avg)
}

/// Moving `t` out of its region keeps the region connected if its
/// same-region edge neighbors are connected within the vertex star of `t`.
fn removable(mesh: &Mesh, star: &[Vec<usize>], nbrs: &[Vec<usize>], owner: &[usize], t: usize) -> bool {
    let r = owner[t];
    let inside: Vec<usize> = nbrs[t].iter().copied().filter(|&u| owner[u] == r).collect();
    if inside.len() <= 1 {
        return true;
    }
    let mut ring: Vec<usize> = mesh.triangles()[t]
        .iter()
        .flat_map(|&v| star[v].iter().copied())
        .filter(|&u| u != t && owner[u] == r)
        .collect();
    ring.sort_unstable();
    ring.dedup();
    let mut seen = vec![inside[0]];
    let mut stack = vec![inside[0]];
    while let Some(u) = stack.pop() {
        for &w in &nbrs[u] {
            if ring.binary_search(&w).is_ok() && !seen.contains(&w) {
                seen.push(w);
                stack.push(w);
            }
        }
    }
    inside.iter().all(|u| seen.contains(u))
}

fn rebalance(mesh: &Mesh, nbrs: &[Vec<usize>], bary: &[[f64; 2]], owner: &mut [usize], size: &mut [usize]) {
    let n = size.len();
    let total = owner.len();
    let star = mesh.vertex_elements();
    for _ in 0..100 * n {
        if is_balanced(size, total) {
            return;
        }
        // adjacent pair with the largest size gap
        let mut best: Option<(usize, usize, usize)> = None;
        for t in 0..total {
            let r = owner[t];
            for &u in &nbrs[t] {
                let s = owner[u];
                if size[r] > size[s] + 1 {
                    let gap = size[r] - size[s];
                    if best.is_none_or(|(g, br, bs)| (gap, std::cmp::Reverse((r, s))) > (g, std::cmp::Reverse((br, bs)))) {
                        best = Some((gap, r, s));
                    }
                }
            }
        }
        let Some((gap, r, s)) = best else { return };
        let want = gap / 2;
        let mut c = [0.0f64; 2];
        for t in (0..total).filter(|&t| owner[t] == s) {
            c[0] += bary[t][0] / size[s] as f64;
            c[1] += bary[t][1] / size[s] as f64;
        }
        let key = |t: usize| std::cmp::Reverse(((bary[t][0] - c[0]).hypot(bary[t][1] - c[1]).to_bits(), t));
        let mut heap: std::collections::BinaryHeap<_> = (0..total)
            .filter(|&t| owner[t] == r && nbrs[t].iter().any(|&u| owner[u] == s))
            .map(|t| (key(t), t))
            .collect();
        let mut moved = 0;
        while moved < want {
            let Some((_, t)) = heap.pop() else { break };
            if owner[t] != r || size[r] <= 1 || !removable(mesh, &star, nbrs, owner, t) {
                continue;
            }
            owner[t] = s;
            size[r] -= 1;
            size[s] += 1;
            moved += 1;
            heap.extend(nbrs[t].iter().copied().filter(|&u| owner[u] == r).map(|u| (key(u), u)));
        }
        if moved == 0 {
            return;
        }
    }
}

/// Elements of one overlapping subdomain together with its dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    /// Sorted global element indices.
    pub elements: Vec<usize>,
    /// Sorted global dofs; position = local index, so this is `R_j`.
    pub dofs: Vec<usize>,
    /// Per local dof: lies on `∂Ω_j ∖ ∂Ω`.
    pub interface: Vec<bool>,
    /// Region boundary edges not on `∂Ω`, oriented w.r.t. their element.
    pub interface_edges: Vec<[usize; 2]>,
    /// Diagonal of `D_j` (empty until the partition of unity is built).
    pub pu: Vec<f64>,
}

impl Subdomain {
    /// Local index of global dof `g`.
    pub fn local_index(&self, g: usize) -> Option<usize> {
        self.dofs.binary_search(&g).ok()
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// `R_j v`.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&g| v[g]).collect()
    }

    /// `out += R_j^T w`.
    pub fn prolong_add(&self, w: &[f64], out: &mut [f64]) {
        for (&g, &x) in self.dofs.iter().zip(w) {
            out[g] += x;
        }
    }
}

/// Width of the partition-of-unity ramp next to each interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PuRamp {
    /// Zero on the interface, full weight one layer inside: the
    /// multiplicity average over the overlap with zero boundary values.
    #[default]
    Sharp,
    /// Linear in the layer distance over the whole overlap, `min(d, 2k)/2k`.
    Linear,
}

impl PuRamp {
    fn width(self, k: usize) -> usize {
        match self {
            PuRamp::Sharp => 1,
            PuRamp::Linear => 2 * k,
        }
    }
}

impl fmt::Display for PuRamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PuRamp::Sharp => "sharp",
            PuRamp::Linear => "linear",
        })
    }
}

impl FromStr for PuRamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(PuRamp::Sharp),
            "linear" => Ok(PuRamp::Linear),
            _ => Err(Error::InvalidConfig(format!("unknown partition-of-unity ramp `{s}` (expected sharp or linear)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub subdomains: Vec<Subdomain>,
    pub overlap_layers: usize,
    pub pu_ramp: PuRamp,
    pub num_dofs: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// `Σ_j R_j^T D_j R_j` as a vector (its diagonal; the sum is diagonal).
    pub fn pu_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.num_dofs];
        for sd in &self.subdomains {
            sd.prolong_add(&sd.pu, &mut s);
        }
        s
    }

    /// ASCII dump, per subdomain: `dof weight interface` records.
    pub fn write_ascii<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "subdomains {} overlap_layers {} pu_ramp {}", self.len(), self.overlap_layers, self.pu_ramp);
        for (j, sd) in self.subdomains.iter().enumerate() {
            let _ = writeln!(s, "subdomain {j} dofs {} elements {}", sd.dofs.len(), sd.elements.len());
            for (l, &g) in sd.dofs.iter().enumerate() {
                let d = sd.pu.get(l).copied().unwrap_or(f64::NAN);
                let _ = writeln!(s, "{g} {d:.17e} {}", u8::from(sd.interface[l]));
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

fn edge_key([a, b]: [usize; 2]) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Grows every part of `ownership` by `k` layers of vertex-adjacent
/// elements and collects dofs and interface data. The partition of unity
/// is left empty.
pub fn add_overlap_layers(mesh: &Mesh, ownership: &[usize], k: usize) -> Result<Decomposition> {
    if ownership.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: ownership.len() });
    }
    if k == 0 {
        return Err(Error::InvalidPartition("overlap must be at least one layer".into()));
    }
    let n = ownership.iter().copied().max().map_or(0, |m| m + 1);
    let star = mesh.vertex_elements();
    let outer: HashSet<(usize, usize)> = mesh.boundary_edges().iter().map(|e| edge_key(e.vertices)).collect();
    let nv = mesh.num_vertices();
    let mut in_region = vec![false; mesh.num_triangles()];
    let mut vmark = vec![false; nv];
    let mut subdomains = Vec::with_capacity(n);
    for j in 0..n {
        let mut elements: Vec<usize> = (0..ownership.len()).filter(|&t| ownership[t] == j).collect();
        if elements.is_empty() {
            return Err(Error::InvalidPartition(format!("part {j} owns no element")));
        }
        in_region.fill(false);
        for &t in &elements {
            in_region[t] = true;
        }
        for _ in 0..k {
            let verts: Vec<usize> = elements.iter().flat_map(|&t| mesh.triangles()[t]).collect();
            for v in verts {
                for &t in &star[v] {
                    if !in_region[t] {
                        in_region[t] = true;
                        elements.push(t);
                    }
                }
            }
        }
        elements.sort_unstable();
        vmark.fill(false);
        for &t in &elements {
            for v in mesh.triangles()[t] {
                vmark[v] = true;
            }
        }
        let dofs: Vec<usize> = (0..nv).filter(|&v| vmark[v]).collect();
        let interface_edges: Vec<[usize; 2]> = mesh
            .boundary_of(&elements)
            .into_iter()
            .map(|(_, e)| e)
            .filter(|&e| !outer.contains(&edge_key(e)))
            .collect();
        let mut interface = vec![false; dofs.len()];
        for e in &interface_edges {
            for v in e {
                interface[dofs.binary_search(v).expect("edge vertex is a dof")] = true;
            }
        }
        subdomains.push(Subdomain { elements, dofs, interface, interface_edges, pu: Vec::new() });
    }
    Ok(Decomposition { subdomains, overlap_layers: k, pu_ramp: PuRamp::default(), num_dofs: nv })
}

/// Ramp `min(d, m) / m` in the graph distance `d` from the interface,
/// `m` given by `dec.pu_ramp`, normalized across subdomains.
pub fn build_partition_of_unity(mesh: &Mesh, mut dec: Decomposition) -> Result<Decomposition> {
    let m = dec.pu_ramp.width(dec.overlap_layers) as f64;
    let nv = mesh.num_vertices();
    let mut raw = Vec::with_capacity(dec.len());
    let mut total = vec![0.0; nv];
    let mut local_of = vec![usize::MAX; nv];
    for sd in &dec.subdomains {
        for (l, &g) in sd.dofs.iter().enumerate() {
            local_of[g] = l;
        }
        let nl = sd.dofs.len();
        let mut adj = vec![Vec::new(); nl];
        for &t in &sd.elements {
            let tri = mesh.triangles()[t];
            for a in 0..3 {
                let (p, q) = (local_of[tri[a]], local_of[tri[(a + 1) % 3]]);
                adj[p].push(q);
                adj[q].push(p);
            }
        }
        let mut dist = vec![usize::MAX; nl];
        let mut q = VecDeque::new();
        for l in (0..nl).filter(|&l| sd.interface[l]) {
            dist[l] = 0;
            q.push_back(l);
        }
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        let w: Vec<f64> = dist.iter().map(|&d| if d == usize::MAX { 1.0 } else { (d as f64).min(m) / m }).collect();
        for (&g, &x) in sd.dofs.iter().zip(&w) {
            total[g] += x;
            local_of[g] = usize::MAX;
        }
        raw.push(w);
    }
    if let Some(g) = (0..nv).find(|&g| total[g] <= 0.0) {
        return Err(Error::InvalidPartition(format!("dof {g} has zero total partition-of-unity weight")));
    }
    for (sd, w) in dec.subdomains.iter_mut().zip(raw) {
        sd.pu = sd.dofs.iter().zip(&w).map(|(&g, &x)| x / total[g]).collect();
    }
    Ok(dec)
}

/// Overlap growth followed by the partition of unity.
pub fn decompose(mesh: &Mesh, ownership: &[usize], k: usize) -> Result<Decomposition> {
    decompose_with(mesh, ownership, k, PuRamp::default())
}

pub fn decompose_with(mesh: &Mesh, ownership: &[usize], k: usize, ramp: PuRamp) -> Result<Decomposition> {
    let mut dec = add_overlap_layers(mesh, ownership, k)?;
    dec.pu_ramp = ramp;
    build_partition_of_unity(mesh, dec)
}

/// Local Robin problem `B_j`, local inner product `F_j` and their factors.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub b: SparseMatrix,
    pub f: SparseMatrix,
    pub b_factor: SparseLu,
    /// `None` when `F_j` is not positive definite (`c̃ <= 0`) or was not
    /// requested.
    pub f_factor: Option<SpdFactor>,
    /// Local rows eliminated as Dirichlet.
    pub dirichlet: Vec<bool>,
}

/// Assembles and factors the local problem of subdomain `j`.
pub fn assemble_local(
    mesh: &Mesh,
    pd: &ProblemDefinition,
    dofs: &DofMap,
    dec: &Decomposition,
    j: usize,
) -> Result<LocalSystem> {
    assemble_local_with(mesh, pd, dofs, dec, j, true)
}

/// As [`assemble_local`]; `factor_f = false` skips the Cholesky factor of
/// `F_j`, which the preconditioner itself never uses.
pub fn assemble_local_with(
    mesh: &Mesh,
    pd: &ProblemDefinition,
    dofs: &DofMap,
    dec: &Decomposition,
    j: usize,
    factor_f: bool,
) -> Result<LocalSystem> {
    let sd = dec
        .subdomains
        .get(j)
        .ok_or_else(|| Error::InvalidPartition(format!("subdomain {j} out of range ({})", dec.len())))?;
    let nl = sd.dofs.len();
    let loc = |g: usize| sd.local_index(g).expect("element vertex is a subdomain dof");
    let mut tb = Vec::with_capacity(9 * sd.elements.len());
    let mut tf = Vec::with_capacity(9 * sd.elements.len());
    for &t in &sd.elements {
        let c = element_contribution(mesh, pd, t);
        let tri = mesh.triangles()[t].map(loc);
        for i in 0..3 {
            for k in 0..3 {
                tb.push((tri[i], tri[k], c.a[i][k]));
                tf.push((tri[i], tri[k], c.f[i][k]));
            }
        }
    }
    let robin_outer: Vec<[usize; 2]> = {
        let set: HashSet<usize> = sd.elements.iter().copied().collect();
        mesh.boundary_edges()
            .iter()
            .filter(|e| e.marker == BoundaryMarker::Robin && set.contains(&e.element))
            .map(|e| e.vertices)
            .collect()
    };
    for e in sd.interface_edges.iter().chain(&robin_outer) {
        let (m, _) = robin_edge_matrix(mesh, pd, *e);
        let le = e.map(loc);
        for r in 0..2 {
            for c in 0..2 {
                tb.push((le[r], le[c], m[r][c]));
            }
        }
    }
    let dirichlet: Vec<bool> = sd.dofs.iter().map(|&g| dofs.is_dirichlet(g)).collect();
    eliminate_dirichlet(nl, &mut tb, &dirichlet);
    eliminate_dirichlet(nl, &mut tf, &dirichlet);
    let b = SparseMatrix::from_triplets(nl, nl, &tb)?;
    let f = SparseMatrix::from_triplets(nl, nl, &tf)?;
    let b_factor = SparseLu::factorize(&b)?;
    let f_factor = if factor_f { SpdFactor::factorize(&f).ok() } else { None };
    Ok(LocalSystem { b, f, b_factor, f_factor, dirichlet })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{assemble_global, Forcing, Scenario};

    fn paper_mesh(n: usize) -> Mesh {
        Mesh::rectangle(0.2 * n as f64, 0.2, 60 * n, 60).unwrap()
    }

    #[test]
    fn strips_examples() {
        let m = paper_mesh(5);
        assert!(partition_strips(&m, 1).unwrap().iter().all(|&p| p == 0));
        let own = partition_strips(&m, 5).unwrap();
        for j in 0..5 {
            assert_eq!(own.iter().filter(|&&p| p == j).count(), 7200);
        }
        assert!(partition_strips(&m, 301).is_err());
    }

    fn connected(mesh: &Mesh, own: &[usize], r: usize) -> bool {
        let nbrs = mesh.edge_neighbors();
        let members: Vec<usize> = (0..own.len()).filter(|&t| own[t] == r).collect();
        let mut seen = vec![false; own.len()];
        let mut stack = vec![members[0]];
        seen[members[0]] = true;
        let mut count = 1;
        while let Some(t) = stack.pop() {
            for &u in &nbrs[t] {
                if own[u] == r && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == members.len()
    }

    #[test]
    fn greedy_is_balanced_connected_and_deterministic() {
        let m = Mesh::rectangle(1.0, 0.2, 100, 20).unwrap();
        for (n, seed) in [(1, 0), (4, 3), (7, 11), (16, 5)] {
            let own = partition_greedy(&m, n, seed).unwrap();
            let avg = m.num_triangles() as f64 / n as f64;
            for r in 0..n {
                let c = own.iter().filter(|&&p| p == r).count() as f64;
                assert!(c <= 1.1 * avg && c >= 0.9 * avg, "n={n} region {r}: {c} vs {avg}");
                assert!(connected(&m, &own, r), "n={n} region {r} disconnected");
            }
            assert_eq!(own, partition_greedy(&m, n, seed).unwrap());
        }
    }

    #[test]
    fn strip_interface_is_one_grid_line() {
        let m = paper_mesh(5);
        let dec = decompose(&m, &partition_strips(&m, 5).unwrap(), 1).unwrap();
        let sd = &dec.subdomains[0];
        let xs: Vec<f64> = (0..sd.dofs.len()).filter(|&l| sd.interface[l]).map(|l| m.vertices()[sd.dofs[l]][0]).collect();
        assert_eq!(xs.len(), 61);
        assert!(xs.iter().all(|&x| (x - (0.2 + m.h())).abs() < 1e-12));
    }

    #[test]
    fn partition_of_unity_properties() {
        let m = Mesh::rectangle(0.6, 0.2, 30, 10).unwrap();
        for (own, k) in [
            (partition_strips(&m, 3).unwrap(), 1),
            (partition_strips(&m, 3).unwrap(), 3),
            (partition_greedy(&m, 5, 2).unwrap(), 2),
            (partition_strips(&m, 1).unwrap(), 1),
        ] {
            for ramp in [PuRamp::Sharp, PuRamp::Linear] {
            let dec = decompose_with(&m, &own, k, ramp).unwrap();
            for s in dec.pu_sum() {
                assert!((s - 1.0).abs() <= 1e-15);
            }
            for sd in &dec.subdomains {
                for l in 0..sd.dofs.len() {
                    assert!(sd.pu[l] >= 0.0);
                    if sd.interface[l] {
                        assert_eq!(sd.pu[l], 0.0);
                    }
                }
            }
            }
        }
    }

    #[test]
    fn ramp_profiles_across_a_strip_interface() {
        let m = Mesh::rectangle(0.6, 0.2, 30, 10).unwrap();
        let h = m.h();
        let own = partition_strips(&m, 3).unwrap();
        let profile = |ramp| {
            let dec = decompose_with(&m, &own, 2, ramp).unwrap();
            let sd = &dec.subdomains[0];
            (-2..=2)
                .map(|i| {
                    let x = 0.2 + i as f64 * h;
                    let g = (0..m.num_vertices()).find(|&g| {
                        let p = m.vertices()[g];
                        (p[0] - x).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12
                    });
                    sd.pu[sd.local_index(g.unwrap()).unwrap()]
                })
                .collect::<Vec<f64>>()
        };
        let close = |a: Vec<f64>, b: [f64; 5]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(profile(PuRamp::Linear), [1.0, 0.75, 0.5, 0.25, 0.0]));
        assert!(close(profile(PuRamp::Sharp), [1.0, 0.5, 0.5, 0.5, 0.0]));
        assert_eq!("linear".parse::<PuRamp>().unwrap(), PuRamp::Linear);
        assert!("smooth".parse::<PuRamp>().is_err());
    }

    #[test]
    fn owner_interior_dof_has_full_weight() {
        let m = Mesh::rectangle(0.6, 0.2, 30, 10).unwrap();
        let dec = decompose(&m, &partition_strips(&m, 3).unwrap(), 1).unwrap();
        // x = 0.1 lies deep inside strip 0
        let g = 5;
        let sd = &dec.subdomains[0];
        assert_eq!(sd.pu[sd.local_index(g).unwrap()], 1.0);
    }

    #[test]
    fn huge_overlap_empties_interfaces() {
        let m = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let dec = decompose(&m, &partition_strips(&m, 2).unwrap(), 20).unwrap();
        for sd in &dec.subdomains {
            assert!(sd.interface.iter().all(|&b| !b));
            assert_eq!(sd.dofs.len(), m.num_vertices());
        }
        assert!(dec.pu_sum().iter().all(|&s| (s - 1.0).abs() <= 1e-15));
    }

    #[test]
    fn zero_overlap_is_rejected() {
        let m = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        assert!(add_overlap_layers(&m, &partition_strips(&m, 2).unwrap(), 0).is_err());
    }

    #[test]
    fn single_subdomain_local_problem_is_global() {
        let m = Mesh::rectangle(0.4, 0.2, 8, 4).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Rotating, 1.0, 0.01, Forcing::Center, 0.15);
        let sys = assemble_global(&m, &pd).unwrap();
        let dec = decompose(&m, &partition_strips(&m, 1).unwrap(), 1).unwrap();
        let loc = assemble_local(&m, &pd, &sys.dof_map, &dec, 0).unwrap();
        assert_eq!(loc.b.linear_combination(1.0, &sys.a, -1.0).unwrap().max_abs(), 0.0);
        assert_eq!(loc.f.linear_combination(1.0, &sys.f, -1.0).unwrap().max_abs(), 0.0);
        assert!(loc.f_factor.is_some());
    }

    #[test]
    fn local_coercivity_gap_is_interface_mass() {
        let m = Mesh::rectangle(0.6, 0.2, 12, 4).unwrap();
        let pd = ProblemDefinition::from_scenario(Scenario::Rotating, 1.0, 1.0, Forcing::Center, 0.0);
        let sys = assemble_global(&m, &pd).unwrap();
        let dec = decompose(&m, &partition_strips(&m, 3).unwrap(), 1).unwrap();
        for j in 0..3 {
            let loc = assemble_local(&m, &pd, &sys.dof_map, &dec, j).unwrap();
            let gap = loc.b.symmetric_part().linear_combination(1.0, &loc.f, -1.0).unwrap();
            let sd = &dec.subdomains[j];
            for i in 0..sd.num_dofs() {
                let (cols, vals) = gap.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    if v.abs() > 1e-14 {
                        assert!(sd.interface[i] && sd.interface[c]);
                    }
                }
            }
            let (lo, _) = crate::linalg::symmetric_eigen_extremes(&gap.to_dense()).unwrap();
            assert!(lo > -1e-13);
        }
    }
}
