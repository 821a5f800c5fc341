//! Structured triangular meshes of a rectangle and P1 dof numbering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMarker {
    Dirichlet,
    Robin,
}

/// Boundary edge, oriented counterclockwise with respect to its triangle so
/// that the outward normal is `(dy, -dx) / len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub element: usize,
    pub marker: BoundaryMarker,
}

/// Per-element P1 data.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the three barycentric basis functions.
    pub grads: [[f64; 2]; 3],
    pub barycenter: [f64; 2],
    /// Longest edge.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    h: f64,
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
}

impl Mesh {
    /// Uniform `nx x ny` grid on `[0, width] x [0, height]`; each cell is
    /// split along its lower-left to upper-right diagonal. All outer edges
    /// start as Dirichlet.
    pub fn rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidMesh(format!("dimensions must be positive, got {width} x {height}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!("cell counts must be >= 1, got {nx} x {ny}")));
        }
        let dx = width / nx as f64;
        let dy = height / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // exact end coordinates, no accumulated rounding at the far side
                let x = if i == nx { width } else { i as f64 * dx };
                let y = if j == ny { height } else { j as f64 * dy };
                vertices.push([x, y]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let cell = |i: usize, j: usize| 2 * (j * nx + i);
        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        let d = BoundaryMarker::Dirichlet;
        for i in 0..nx {
            boundary_edges.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], element: cell(i, 0), marker: d });
        }
        for j in 0..ny {
            boundary_edges.push(BoundaryEdge {
                vertices: [vid(nx, j), vid(nx, j + 1)],
                element: cell(nx - 1, j),
                marker: d,
            });
        }
        for i in (0..nx).rev() {
            boundary_edges.push(BoundaryEdge {
                vertices: [vid(i + 1, ny), vid(i, ny)],
                element: cell(i, ny - 1) + 1,
                marker: d,
            });
        }
        for j in (0..ny).rev() {
            boundary_edges.push(BoundaryEdge { vertices: [vid(0, j + 1), vid(0, j)], element: cell(0, j) + 1, marker: d });
        }
        Ok(Self { vertices, triangles, boundary_edges, h: dx.max(dy), nx, ny, width, height })
    }

    /// Marks each boundary edge Robin iff `robin` holds at its midpoint.
    pub fn classify_boundary<P: Fn(f64, f64) -> bool>(mut self, robin: P) -> Self {
        for e in &mut self.boundary_edges {
            let [a, b] = e.vertices;
            let mx = 0.5 * (self.vertices[a][0] + self.vertices[b][0]);
            let my = 0.5 * (self.vertices[a][1] + self.vertices[b][1]);
            e.marker = if robin(mx, my) { BoundaryMarker::Robin } else { BoundaryMarker::Dirichlet };
        }
        self
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Uniform grid spacing (the larger of the two directions).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[t];
        let p = [self.vertices[a], self.vertices[b], self.vertices[c]];
        let area = self.signed_area(t);
        let mut grads = [[0.0; 2]; 3];
        for k in 0..3 {
            let (q, r) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            grads[k] = [(q[1] - r[1]) / (2.0 * area), (r[0] - q[0]) / (2.0 * area)];
        }
        let barycenter = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let len = |u: [f64; 2], v: [f64; 2]| ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt();
        let diameter = len(p[0], p[1]).max(len(p[1], p[2])).max(len(p[2], p[0]));
        ElementGeometry { area, grads, barycenter, diameter }
    }

    /// Elements incident to each vertex, in increasing element order.
    pub fn vertex_elements(&self) -> Vec<Vec<usize>> {
        let mut ve = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                ve[v].push(t);
            }
        }
        ve
    }

    /// Elements sharing an edge with each element.
    pub fn edge_neighbors(&self) -> Vec<Vec<usize>> {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len() / 2);
        let mut nbrs = vec![Vec::with_capacity(3); self.triangles.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&s) = owner.get(&key) {
                    nbrs[t].push(s);
                    nbrs[s].push(t);
                } else {
                    owner.insert(key, t);
                }
            }
        }
        nbrs
    }

    /// Edges of the union of `elements` that belong to exactly one of them,
    /// oriented counterclockwise w.r.t. that element: `(element, [a, b])`.
    pub fn boundary_of(&self, elements: &[usize]) -> Vec<(usize, [usize; 2])> {
        let mut seen: HashMap<(usize, usize), Option<(usize, [usize; 2])>> = HashMap::with_capacity(elements.len() * 2);
        let mut order = Vec::new();
        for &t in elements {
            let tri = self.triangles[t];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match seen.get_mut(&key) {
                    Some(slot) => *slot = None,
                    None => {
                        seen.insert(key, Some((t, [a, b])));
                        order.push(key);
                    }
                }
            }
        }
        order.into_iter().filter_map(|k| seen[&k]).collect()
    }

    /// Outward unit normal and length of an oriented edge.
    pub fn edge_normal(&self, [a, b]: [usize; 2]) -> ([f64; 2], f64) {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = (dx * dx + dy * dy).sqrt();
        ([dy / len, -dx / len], len)
    }

    /// ASCII dump: vertices, triangles and boundary edges, one record per line.
    pub fn write_ascii<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = match e.marker {
                BoundaryMarker::Dirichlet => "dirichlet",
                BoundaryMarker::Robin => "robin",
            };
            let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], m);
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

/// P1 degrees of freedom: one per vertex, Dirichlet dofs kept in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dirichlet: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut dirichlet = vec![false; mesh.num_vertices()];
        for e in mesh.boundary_edges() {
            if e.marker == BoundaryMarker::Dirichlet {
                dirichlet[e.vertices[0]] = true;
                dirichlet[e.vertices[1]] = true;
            }
        }
        Self { dirichlet }
    }

    pub fn num_dofs(&self) -> usize {
        self.dirichlet.len()
    }

    /// P1: the dof of vertex `v` is `v`.
    pub fn dof(&self, vertex: usize) -> usize {
        vertex
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    pub fn dirichlet_flags(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.dirichlet.len()).filter(|&i| !self.dirichlet[i]).collect()
    }
}
