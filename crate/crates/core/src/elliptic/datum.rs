use serde::{Deserialize, Serialize};

use crate::geometry::Mesh;
use crate::{Error, Point, Result};

/// Finite basis in which Dirichlet data are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryBasis {
    /// Trigonometric polynomials in the polar angle about the domain centre:
    /// `[1, cos θ, sin θ, cos 2θ, sin 2θ, …, cos mθ, sin mθ]`.
    Fourier { max_degree: usize },
    /// One hat function per boundary node, in boundary-loop order.
    Nodal { nodes: usize },
}

impl BoundaryBasis {
    pub fn dim(&self) -> usize {
        match *self {
            BoundaryBasis::Fourier { max_degree } => 2 * max_degree + 1,
            BoundaryBasis::Nodal { nodes } => nodes,
        }
    }

    /// Natural basis for a mesh: Fourier on the disk, nodal on the square.
    pub fn natural(mesh: &Mesh, max_degree: usize) -> BoundaryBasis {
        match mesh.domain() {
            crate::geometry::DomainKind::Disk => BoundaryBasis::Fourier { max_degree },
            crate::geometry::DomainKind::Square => BoundaryBasis::Nodal {
                nodes: mesh.boundary_nodes().len(),
            },
        }
    }

    /// Same kind of basis truncated to its first elements: Fourier degree
    /// `max_degree`, or the unchanged nodal basis.
    pub fn truncated(&self, max_degree: usize) -> BoundaryBasis {
        match *self {
            BoundaryBasis::Fourier { max_degree: m } => BoundaryBasis::Fourier {
                max_degree: max_degree.min(m),
            },
            nodal => nodal,
        }
    }
}

/// Value of the `j`-th Fourier basis function at angle `theta`.
pub fn fourier_mode(j: usize, theta: f64) -> f64 {
    if j == 0 {
        1.0
    } else {
        let k = ((j + 1) / 2) as f64;
        if j % 2 == 1 {
            (k * theta).cos()
        } else {
            (k * theta).sin()
        }
    }
}

/// Dirichlet datum `g` given by its coefficients in a boundary basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDatum {
    basis: BoundaryBasis,
    coefficients: Vec<f64>,
}

impl BoundaryDatum {
    pub fn new(basis: BoundaryBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "basis {basis:?} needs {} coefficients, got {}",
                basis.dim(),
                coefficients.len()
            )));
        }
        Ok(BoundaryDatum { basis, coefficients })
    }

    pub fn fourier(max_degree: usize, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(BoundaryBasis::Fourier { max_degree }, coefficients)
    }

    pub fn zero(basis: BoundaryBasis) -> Self {
        BoundaryDatum {
            basis,
            coefficients: vec![0.0; basis.dim()],
        }
    }

    /// The `j`-th basis element.
    pub fn unit(basis: BoundaryBasis, j: usize) -> Self {
        let mut d = Self::zero(basis);
        d.coefficients[j] = 1.0;
        d
    }

    /// Nodal interpolant of `f` on the boundary of `mesh`.
    pub fn nodal_from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        let coefficients: Vec<f64> = mesh
            .boundary_nodes()
            .iter()
            .map(|&v| f(mesh.vertices()[v]))
            .collect();
        BoundaryDatum {
            basis: BoundaryBasis::Nodal {
                nodes: coefficients.len(),
            },
            coefficients,
        }
    }

    pub fn basis(&self) -> BoundaryBasis {
        self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Evaluates the datum at the boundary nodes of `mesh`, in loop order.
    pub fn boundary_values(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        match self.basis {
            BoundaryBasis::Fourier { .. } => {
                let c = mesh.domain().center();
                Ok(mesh
                    .boundary_nodes()
                    .iter()
                    .map(|&v| {
                        let p = mesh.vertices()[v];
                        let theta = (p[1] - c[1]).atan2(p[0] - c[0]);
                        self.coefficients
                            .iter()
                            .enumerate()
                            .map(|(j, &cj)| cj * fourier_mode(j, theta))
                            .sum()
                    })
                    .collect())
            }
            BoundaryBasis::Nodal { nodes } => {
                if nodes != mesh.boundary_nodes().len() {
                    return Err(Error::invalid(format!(
                        "nodal datum has {nodes} values but the mesh has {} boundary nodes",
                        mesh.boundary_nodes().len()
                    )));
                }
                Ok(self.coefficients.clone())
            }
        }
    }

    /// Discrete boundary L² norm (nodal values weighted by arc length).
    pub fn boundary_norm(&self, mesh: &Mesh) -> Result<f64> {
        let values = self.boundary_values(mesh)?;
        Ok(values
            .iter()
            .zip(mesh.boundary_weights())
            .map(|(g, w)| g * g * w)
            .sum::<f64>()
            .sqrt())
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `Σ sᵢ gᵢ` for data sharing one basis.
    pub fn linear_combination(terms: &[(f64, &BoundaryDatum)]) -> Result<BoundaryDatum> {
        let first = terms
            .first()
            .ok_or_else(|| Error::invalid("empty linear combination"))?;
        let basis = first.1.basis;
        let mut coefficients = vec![0.0; basis.dim()];
        for (s, d) in terms {
            if d.basis != basis {
                return Err(Error::invalid("data expressed in different boundary bases"));
            }
            for (acc, c) in coefficients.iter_mut().zip(&d.coefficients) {
                *acc += s * c;
            }
        }
        Ok(BoundaryDatum { basis, coefficients })
    }

    pub fn scaled(&self, s: f64) -> BoundaryDatum {
        BoundaryDatum {
            basis: self.basis,
            coefficients: self.coefficients.iter().map(|c| s * c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainKind};

    #[test]
    fn fourier_layout() {
        assert_eq!(BoundaryBasis::Fourier { max_degree: 32 }.dim(), 65);
        let theta = 0.3;
        assert_eq!(fourier_mode(0, theta), 1.0);
        assert_eq!(fourier_mode(1, theta), theta.cos());
        assert_eq!(fourier_mode(2, theta), theta.sin());
        assert_eq!(fourier_mode(4, theta), (2.0 * theta).sin());
        assert!(BoundaryDatum::fourier(2, vec![0.0; 4]).is_err());
    }

    #[test]
    fn coordinate_data_match_nodal_interpolants() {
        let mesh = build_mesh(DomainKind::Disk, 0.2).unwrap();
        let x1 = BoundaryDatum::fourier(1, vec![0.0, 1.0, 0.0]).unwrap();
        let nodal = BoundaryDatum::nodal_from_fn(&mesh, |p| p[0]);
        let a = x1.boundary_values(&mesh).unwrap();
        let b = nodal.boundary_values(&mesh).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_datum_norm_is_sqrt_perimeter() {
        let mesh = build_mesh(DomainKind::Square, 0.1).unwrap();
        let one = BoundaryDatum::nodal_from_fn(&mesh, |_| 1.0);
        assert!((one.boundary_norm(&mesh).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_bases_do_not_combine() {
        let f = BoundaryDatum::zero(BoundaryBasis::Fourier { max_degree: 1 });
        let n = BoundaryDatum::zero(BoundaryBasis::Nodal { nodes: 3 });
        assert!(BoundaryDatum::linear_combination(&[(1.0, &f), (1.0, &n)]).is_err());
    }
}
