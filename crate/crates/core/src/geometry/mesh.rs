use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Reference domains: the unit disk centred at the origin and the unit
/// square `[0, 1]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disk,
    Square,
}

impl DomainKind {
    pub fn diameter(self) -> f64 {
        match self {
            DomainKind::Disk => 2.0,
            DomainKind::Square => 2f64.sqrt(),
        }
    }

    /// Radius of the largest inscribed disk.
    pub fn inradius(self) -> f64 {
        match self {
            DomainKind::Disk => 1.0,
            DomainKind::Square => 0.5,
        }
    }

    pub fn center(self) -> Point {
        match self {
            DomainKind::Disk => [0.0, 0.0],
            DomainKind::Square => [0.5, 0.5],
        }
    }

    pub fn area(self) -> f64 {
        match self {
            DomainKind::Disk => PI,
            DomainKind::Square => 1.0,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn clearance(self, p: Point) -> f64 {
        match self {
            DomainKind::Disk => 1.0 - p[0].hypot(p[1]),
            DomainKind::Square => p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]),
        }
    }
}

/// Conforming P1 triangulation of a reference domain.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    domain: DomainKind,
    h_target: f64,
    // derived data
    areas: Vec<f64>,
    shape_gradients: Vec<[[f64; 2]; 3]>,
    boundary_position: Vec<Option<usize>>,
    fingerprint: u64,
}

impl Mesh {
    /// Assembles a mesh from raw parts and checks its invariants.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_nodes: Vec<usize>,
        domain: DomainKind,
        h_target: f64,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        let mut boundary_position = vec![None; nv];
        for (pos, &b) in boundary_nodes.iter().enumerate() {
            if b >= nv {
                return Err(Error::MeshFailure(format!("boundary node {b} out of range")));
            }
            if boundary_position[b].replace(pos).is_some() {
                return Err(Error::MeshFailure(format!("boundary node {b} listed twice")));
            }
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut shape_gradients = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::MeshFailure(format!("triangle {t} references a missing vertex")));
            }
            let [p0, p1, p2] = tri.map(|v| vertices[v]);
            let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            if det <= 0.0 {
                return Err(Error::MeshFailure(format!(
                    "triangle {t} is inverted or degenerate (2·area = {det:.3e})"
                )));
            }
            if tri.iter().all(|&v| boundary_position[v].is_some()) {
                return Err(Error::MeshFailure(format!(
                    "triangle {t} has all vertices on the boundary"
                )));
            }
            areas.push(0.5 * det);
            // ∇φ_i = rot(p_{i+2} - p_{i+1}) / det
            let grad = |a: Point, b: Point| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
            shape_gradients.push([grad(p1, p2), grad(p2, p0), grad(p0, p1)]);
        }

        let mut hasher = DefaultHasher::new();
        for v in &vertices {
            v[0].to_bits().hash(&mut hasher);
            v[1].to_bits().hash(&mut hasher);
        }
        triangles.hash(&mut hasher);
        boundary_nodes.hash(&mut hasher);

        Ok(Mesh {
            vertices,
            triangles,
            boundary_nodes,
            domain,
            h_target,
            areas,
            shape_gradients,
            boundary_position,
            fingerprint: hasher.finish(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary vertices in counter-clockwise order along ∂Ω.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn h_target(&self) -> f64 {
        self.h_target
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Constant gradients of the three P1 shape functions on triangle `t`.
    pub fn shape_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.shape_gradients[t]
    }

    /// Position of vertex `v` in the boundary loop, if it is a boundary vertex.
    pub fn boundary_position(&self, v: usize) -> Option<usize> {
        self.boundary_position[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_position[v].is_some()
    }

    /// Content hash identifying the mesh.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Diameter of the circumscribed circle of triangle `t`.
    pub fn circumdiameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let la = dist(b, c);
        let lb = dist(a, c);
        let lc = dist(a, b);
        la * lb * lc / (2.0 * self.areas[t])
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let det = 2.0 * self.areas[t];
        let l1 = ((c[0] - b[0]) * (p[1] - b[1]) - (p[0] - b[0]) * (c[1] - b[1])) / det;
        let l2 = ((a[0] - c[0]) * (p[1] - c[1]) - (p[0] - c[0]) * (a[1] - c[1])) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    /// Arc-length weight of each boundary node (half of the two adjacent
    /// boundary edges), in boundary-loop order.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let nb = self.boundary_nodes.len();
        (0..nb)
            .map(|i| {
                let prev = self.vertices[self.boundary_nodes[(i + nb - 1) % nb]];
                let next = self.vertices[self.boundary_nodes[(i + 1) % nb]];
                let here = self.vertices[self.boundary_nodes[i]];
                0.5 * (dist(prev, here) + dist(here, next))
            })
            .collect()
    }

    /// Edge-midpoint quadrature points of triangle `t` (weights `area / 3`).
    pub fn quadrature_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [mid(a, b), mid(b, c), mid(c, a)]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Builds a deterministic triangulation of the reference domain.
///
/// The disk uses concentric rings of points with spacing at most `h_target`
/// (boundary nodes equispaced in angle) triangulated by Delaunay. The square
/// uses a structured grid whose cells are split along the diagonal pointing
/// away from the square's centre, so that no triangle has three boundary
/// vertices.
pub fn build_mesh(domain: DomainKind, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target < 0.5 * domain.diameter()) {
        return Err(Error::invalid(format!(
            "h_target must lie in (0, {}), got {h_target}",
            0.5 * domain.diameter()
        )));
    }
    match domain {
        DomainKind::Disk => build_disk(h_target),
        DomainKind::Square => build_square(h_target),
    }
}

fn build_disk(h: f64) -> Result<Mesh> {
    let rings = (1.0 / h).ceil() as usize;
    let mut vertices: Vec<Point> = vec![[0.0, 0.0]];
    let mut boundary = Vec::new();
    for j in 1..=rings {
        let radius = j as f64 / rings as f64;
        let count = ((2.0 * PI * j as f64).ceil() as usize).max(6);
        let offset = if j % 2 == 1 { 0.0 } else { PI / count as f64 };
        for i in 0..count {
            let theta = offset + 2.0 * PI * i as f64 / count as f64;
            if j == rings {
                boundary.push(vertices.len());
                // boundary nodes lie exactly on the unit circle
                vertices.push([theta.cos(), theta.sin()]);
            } else {
                vertices.push([radius * theta.cos(), radius * theta.sin()]);
            }
        }
    }
    let pts: Vec<delaunator::Point> = vertices
        .iter()
        .map(|p| delaunator::Point { x: p[0], y: p[1] })
        .collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(Error::MeshFailure("Delaunay triangulation is empty".into()));
    }
    let triangles: Vec<[usize; 3]> = tri
        .triangles
        .chunks_exact(3)
        .map(|c| {
            let [a, b, c] = [c[0], c[1], c[2]];
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
            if det < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect();
    Mesh::from_parts(vertices, triangles, boundary, DomainKind::Disk, h)
}

fn build_square(h: f64) -> Result<Mesh> {
    let n = (1.0 / h).ceil() as usize;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let cx = (i as f64 + 0.5) / n as f64 - 0.5;
            let cy = (j as f64 + 0.5) / n as f64 - 0.5;
            if cx * cy >= 0.0 {
                // diagonal v00 - v11
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                // diagonal v10 - v01
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    boundary.extend((0..n).map(|i| id(i, 0)));
    boundary.extend((0..n).map(|j| id(n, j)));
    boundary.extend((0..n).map(|i| id(n - i, n)));
    boundary.extend((0..n).map(|j| id(0, n - j)));
    Mesh::from_parts(vertices, triangles, boundary, DomainKind::Square, h)
}

/// Index of the lowest-numbered triangle containing `p` (barycentric
/// coordinates all ≥ −1e−12), or `None` when `p` lies outside the mesh.
pub fn locate_point(mesh: &Mesh, p: Point) -> Option<usize> {
    (0..mesh.triangles().len()).find(|&t| mesh.barycentric(t, p).iter().all(|&l| l >= -1e-12))
}
