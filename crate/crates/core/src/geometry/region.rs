use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::{Error, Point, Result};

/// Shape of the compact set `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionDescriptor {
    Disk { center: Point, radius: f64 },
    /// Convex or simple polygon, vertices in order.
    Polygon { vertices: Vec<Point> },
}

impl RegionDescriptor {
    /// Strict containment test.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            RegionDescriptor::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < *radius
            }
            RegionDescriptor::Polygon { vertices } => point_in_polygon(vertices, p),
        }
    }

    /// Minimal distance from the region to the boundary of `domain`
    /// (negative when the region sticks out).
    pub fn clearance(&self, domain: super::DomainKind) -> f64 {
        match self {
            RegionDescriptor::Disk { center, radius } => domain.clearance(*center) - radius,
            // the distance to the boundary of a convex domain is concave, so its
            // minimum over a polygon is attained at a vertex
            RegionDescriptor::Polygon { vertices } => vertices
                .iter()
                .map(|&v| domain.clearance(v))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn point_in_polygon(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Finite discretization of the compact set `K`: the barycenters of the mesh
/// triangles whose barycenter lies inside the region.
#[derive(Clone, Debug)]
pub struct SampledRegion {
    points: Vec<Point>,
    containing_triangle: Vec<usize>,
    descriptor: RegionDescriptor,
    clearance: f64,
    mesh_fingerprint: u64,
    spacing: f64,
}

impl SampledRegion {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn containing_triangle(&self) -> &[usize] {
        &self.containing_triangle
    }

    pub fn descriptor(&self) -> &RegionDescriptor {
        &self.descriptor
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh_fingerprint(&self) -> u64 {
        self.mesh_fingerprint
    }

    /// Typical distance between neighbouring samples (mesh size), recorded so
    /// that pointwise results can be extended with a continuity modulus.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Samples lying inside the given ball, as indices into [`Self::points`].
    pub fn indices_in_ball(&self, center: Point, radius: f64) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| {
                let p = self.points[i];
                (p[0] - center[0]).hypot(p[1] - center[1]) < radius
            })
            .collect()
    }
}

/// Discretizes `descriptor` over `mesh`.
///
/// The region must keep a clearance of at least `2·h_target` from ∂Ω.
pub fn sample_region(mesh: &Mesh, descriptor: RegionDescriptor) -> Result<SampledRegion> {
    let clearance = descriptor.clearance(mesh.domain());
    if clearance <= 0.0 {
        return Err(Error::BoundaryContact { clearance });
    }
    if clearance < 2.0 * mesh.h_target() {
        return Err(Error::invalid(format!(
            "region clearance {clearance:.3} is below 2·h_target = {:.3}",
            2.0 * mesh.h_target()
        )));
    }
    if let RegionDescriptor::Disk { radius, .. } = &descriptor {
        if !(*radius > 0.0) {
            return Err(Error::invalid("region radius must be positive"));
        }
    }
    sample_unchecked(mesh, descriptor, clearance)
}

/// Samples the intersection of a ball with Ω without any clearance
/// requirement. Used for local misfit evaluation.
pub fn sample_ball(mesh: &Mesh, center: Point, radius: f64) -> Result<SampledRegion> {
    let descriptor = RegionDescriptor::Disk { center, radius };
    let clearance = descriptor.clearance(mesh.domain());
    sample_unchecked(mesh, descriptor, clearance)
}

fn sample_unchecked(mesh: &Mesh, descriptor: RegionDescriptor, clearance: f64) -> Result<SampledRegion> {
    let mut points = Vec::new();
    let mut containing_triangle = Vec::new();
    for t in 0..mesh.triangles().len() {
        let b = mesh.barycenter(t);
        if descriptor.contains(b) {
            points.push(b);
            containing_triangle.push(t);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mean_area: f64 = containing_triangle.iter().map(|&t| mesh.area(t)).sum::<f64>()
        / containing_triangle.len() as f64;
    Ok(SampledRegion {
        points,
        containing_triangle,
        descriptor,
        clearance,
        mesh_fingerprint: mesh.fingerprint(),
        spacing: (2.0 * mean_area).sqrt(),
    })
}
