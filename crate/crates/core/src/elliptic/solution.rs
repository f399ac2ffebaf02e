use std::fmt::Write as _;
use std::sync::Arc;

use super::{BoundaryDatum, RegularityClass};
use crate::geometry::{Mesh, SampledRegion};
use crate::{Error, Point, Result};

/// Discrete P1 solution `u^g` with its element-wise constant gradients.
#[derive(Clone, Debug)]
pub struct SolutionField {
    mesh: Arc<Mesh>,
    nodal_values: Vec<f64>,
    element_gradients: Vec<[f64; 2]>,
    datum: BoundaryDatum,
    regularity: RegularityClass,
}

impl SolutionField {
    /// Wraps nodal values, computing the exact gradient of the P1 interpolant
    /// on every triangle.
    pub fn from_nodal(
        mesh: Arc<Mesh>,
        nodal_values: Vec<f64>,
        datum: BoundaryDatum,
        regularity: RegularityClass,
    ) -> Self {
        assert_eq!(nodal_values.len(), mesh.vertices().len());
        let element_gradients = (0..mesh.triangles().len())
            .map(|t| {
                let grads = mesh.shape_gradients(t);
                let tri = mesh.triangles()[t];
                let mut g = [0.0; 2];
                for (i, &v) in tri.iter().enumerate() {
                    g[0] += nodal_values[v] * grads[i][0];
                    g[1] += nodal_values[v] * grads[i][1];
                }
                g
            })
            .collect();
        SolutionField {
            mesh,
            nodal_values,
            element_gradients,
            datum,
            regularity,
        }
    }

    /// Interpolant of `f` with a nodal datum recording its boundary trace.
    /// Only a solution when `f` happens to be discretely `L`-harmonic; handy
    /// for tests and for zero members.
    pub fn interpolate(mesh: &Arc<Mesh>, f: impl Fn(Point) -> f64, regularity: RegularityClass) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        let datum = BoundaryDatum::nodal_from_fn(mesh, &f);
        Self::from_nodal(Arc::clone(mesh), values, datum, regularity)
    }

    /// The zero solution, expressed in the given basis.
    pub fn zero(mesh: &Arc<Mesh>, basis: super::BoundaryBasis, regularity: RegularityClass) -> Self {
        Self::from_nodal(
            Arc::clone(mesh),
            vec![0.0; mesh.vertices().len()],
            BoundaryDatum::zero(basis),
            regularity,
        )
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn nodal_values(&self) -> &[f64] {
        &self.nodal_values
    }

    pub fn element_gradients(&self) -> &[[f64; 2]] {
        &self.element_gradients
    }

    pub fn datum(&self) -> &BoundaryDatum {
        &self.datum
    }

    pub fn regularity(&self) -> RegularityClass {
        self.regularity
    }

    /// Value at point `p` of triangle `t` by barycentric interpolation.
    pub fn value_in(&self, t: usize, p: Point) -> f64 {
        let l = self.mesh.barycentric(t, p);
        let tri = self.mesh.triangles()[t];
        l[0] * self.nodal_values[tri[0]] + l[1] * self.nodal_values[tri[1]] + l[2] * self.nodal_values[tri[2]]
    }

    pub fn gradient(&self, t: usize) -> [f64; 2] {
        self.element_gradients[t]
    }

    /// `Σ sᵢ uᵢ`, with the matching combination of boundary data. By linearity
    /// this is the solution for the combined datum.
    pub fn linear_combination(terms: &[(f64, &SolutionField)]) -> Result<SolutionField> {
        let first = terms
            .first()
            .ok_or_else(|| Error::invalid("empty linear combination"))?
            .1;
        let mesh = Arc::clone(&first.mesh);
        let mut nodal = vec![0.0; first.nodal_values.len()];
        let mut grads = vec![[0.0; 2]; first.element_gradients.len()];
        for (s, f) in terms {
            if f.mesh.fingerprint() != mesh.fingerprint() {
                return Err(Error::RegionMismatch);
            }
            for (acc, v) in nodal.iter_mut().zip(&f.nodal_values) {
                *acc += s * v;
            }
            for (acc, g) in grads.iter_mut().zip(&f.element_gradients) {
                acc[0] += s * g[0];
                acc[1] += s * g[1];
            }
        }
        let data: Vec<(f64, &BoundaryDatum)> = terms.iter().map(|(s, f)| (*s, &f.datum)).collect();
        Ok(SolutionField {
            mesh,
            nodal_values: nodal,
            element_gradients: grads,
            datum: BoundaryDatum::linear_combination(&data)?,
            regularity: first.regularity,
        })
    }
}

/// Pointwise value and gradient at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldRecord {
    pub point: Point,
    pub value: f64,
    pub gradient: [f64; 2],
}

/// Evaluates `u` and `∇u` at every sample of `region`.
pub fn evaluate(sol: &SolutionField, region: &SampledRegion) -> Result<Vec<FieldRecord>> {
    if sol.mesh.fingerprint() != region.mesh_fingerprint() {
        return Err(Error::RegionMismatch);
    }
    Ok(region
        .points()
        .iter()
        .zip(region.containing_triangle())
        .map(|(&p, &t)| FieldRecord {
            point: p,
            value: sol.value_in(t, p),
            gradient: sol.gradient(t),
        })
        .collect())
}

/// CSV dump with header `x,y,u,ux,uy` and 17 significant digits.
pub fn field_csv(records: &[FieldRecord]) -> String {
    let mut out = String::from("x,y,u,ux,uy\n");
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.point[0], r.point[1], r.value, r.gradient[0], r.gradient[1]
        )
        .unwrap();
    }
    out
}
