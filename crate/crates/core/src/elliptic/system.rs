use std::sync::Arc;

use super::{check_ellipticity, BoundaryDatum, CoefficientField, RegularityClass, SolutionField};
use crate::geometry::Mesh;
use crate::linalg::{BandedLu, CsrMatrix};
use crate::{Error, Result};

/// Factorizations whose inverse condition estimate falls below this are
/// reported singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Shape-function values at the three edge midpoints `(p0p1, p1p2, p2p0)`.
const MIDPOINT_SHAPE: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Global P1 matrix of the weak form
/// `∫ (a∇u + bu)·∇v + (c·∇u + qu) v dx` over all vertices, before the
/// Dirichlet elimination. Row index = test function, column = trial function.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    mesh: Arc<Mesh>,
    matrix: CsrMatrix,
    interior: Vec<usize>,
    regularity: RegularityClass,
}

/// Assembles the global matrix after verifying ellipticity at every
/// quadrature point.
pub fn assemble(mesh: &Arc<Mesh>, coeffs: &CoefficientField) -> Result<AssembledSystem> {
    let check = check_ellipticity(coeffs, mesh);
    if !check.passed {
        return Err(Error::NotElliptic {
            point: check.worst_point,
            eigenvalue: check.min_eigenvalue,
            claimed: coeffs.lambda(),
        });
    }
    let nv = mesh.vertices().len();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let grads = mesh.shape_gradients(t);
        let w = mesh.area(t) / 3.0;
        let mut local = [[0.0; 3]; 3];
        for (qp, phi) in mesh.quadrature_points(t).iter().zip(MIDPOINT_SHAPE) {
            let a = coeffs.a(*qp);
            let b = coeffs.b(*qp);
            let c = coeffs.c(*qp);
            let q = coeffs.q(*qp);
            for i in 0..3 {
                for j in 0..3 {
                    let flux = a.apply(grads[j]);
                    let mut v = flux[0] * grads[i][0] + flux[1] * grads[i][1];
                    v += phi[j] * (b[0] * grads[i][0] + b[1] * grads[i][1]);
                    v += (c[0] * grads[j][0] + c[1] * grads[j][1]) * phi[i];
                    v += q * phi[i] * phi[j];
                    local[i][j] += w * v;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(nv, nv, &triplets);
    let interior = (0..nv).filter(|&v| !mesh.is_boundary(v)).collect();
    Ok(AssembledSystem {
        mesh: Arc::clone(mesh),
        matrix,
        interior,
        regularity: coeffs.regularity(),
    })
}

impl AssembledSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Full matrix over all vertices.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Interior vertex ids, in increasing order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_block(&self) -> CsrMatrix {
        self.matrix.submatrix(&self.interior, &self.interior)
    }

    /// Coupling of interior rows to boundary columns (boundary-loop order).
    pub fn boundary_block(&self) -> CsrMatrix {
        self.matrix.submatrix(&self.interior, self.mesh.boundary_nodes())
    }

    /// Factors the interior block; fails with [`Error::SingularSystem`] when the
    /// Dirichlet problem is not uniquely solvable on this mesh.
    pub fn factorize(self) -> Result<DirichletSystem> {
        let a_ii = self.interior_block();
        let a_ib = self.boundary_block();
        let lu = BandedLu::factor(&a_ii);
        // scale by the full operator so a block that cancels to round-off
        // is not mistaken for a well-conditioned one
        let condition_estimate = lu
            .condition_estimate()
            .max(self.matrix.norm_inf() / lu.min_pivot());
        if !(condition_estimate * SINGULAR_PIVOT_RATIO < 1.0) {
            return Err(Error::SingularSystem { condition_estimate });
        }
        Ok(DirichletSystem {
            mesh: self.mesh,
            interior: self.interior,
            regularity: self.regularity,
            a_ii,
            a_ib,
            lu,
        })
    }
}

/// Factored Dirichlet problem: the discrete solution map `g ↦ u^g`.
///
/// Immutable after construction; solves for distinct data may run
/// concurrently.
#[derive(Debug)]
pub struct DirichletSystem {
    mesh: Arc<Mesh>,
    interior: Vec<usize>,
    regularity: RegularityClass,
    a_ii: CsrMatrix,
    a_ib: CsrMatrix,
    lu: BandedLu,
}

impl DirichletSystem {
    /// Assembles and factors in one go.
    pub fn new(mesh: &Arc<Mesh>, coeffs: &CoefficientField) -> Result<Self> {
        assemble(mesh, coeffs)?.factorize()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn regularity(&self) -> RegularityClass {
        self.regularity
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.condition_estimate()
    }

    /// Relative residual `‖A_II u_I + A_IB g‖∞ / (‖A_II‖∞‖u_I‖∞ + ‖A_IB g‖∞)`
    /// of the interior equations.
    pub fn relative_residual(&self, sol: &SolutionField) -> f64 {
        let g: Vec<f64> = self
            .mesh
            .boundary_nodes()
            .iter()
            .map(|&v| sol.nodal_values()[v])
            .collect();
        let u: Vec<f64> = self.interior.iter().map(|&v| sol.nodal_values()[v]).collect();
        let coupling = self.a_ib.mul_vec(&g);
        let (r, scale) = self.residual(&u, &coupling);
        r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }

    fn residual(&self, u: &[f64], coupling: &[f64]) -> (Vec<f64>, f64) {
        let au = self.a_ii.mul_vec(u);
        let r: Vec<f64> = au.iter().zip(coupling).map(|(a, c)| a + c).collect();
        let unorm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cnorm = coupling.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = (self.a_ii.norm_inf() * unorm + cnorm).max(f64::MIN_POSITIVE);
        (r, scale)
    }
}

/// Solves `Lu = 0` in Ω, `u = g` at the boundary nodes.
pub fn solve_dirichlet(system: &DirichletSystem, datum: &BoundaryDatum) -> Result<SolutionField> {
    let mesh = &system.mesh;
    let g = datum.boundary_values(mesh)?;
    let coupling = system.a_ib.mul_vec(&g);
    let rhs: Vec<f64> = coupling.iter().map(|v| -v).collect();
    let mut u = system.lu.solve(&rhs);
    // one step of iterative refinement when the residual is not at round-off
    let (r, scale) = system.residual(&u, &coupling);
    if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) > 1e-13 * scale {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let du = system.lu.solve(&neg);
        for (ui, di) in u.iter_mut().zip(du) {
            *ui += di;
        }
    }
    let mut nodal = vec![0.0; mesh.vertices().len()];
    for (&v, &value) in system.interior.iter().zip(&u) {
        nodal[v] = value;
    }
    for (&v, &value) in mesh.boundary_nodes().iter().zip(&g) {
        nodal[v] = value;
    }
    Ok(SolutionField::from_nodal(
        Arc::clone(mesh),
        nodal,
        datum.clone(),
        system.regularity,
    ))
}
