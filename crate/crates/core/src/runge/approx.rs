use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AffineTarget;
use crate::elliptic::{solve_dirichlet, BoundaryBasis, BoundaryDatum, DirichletSystem, SolutionField};
use crate::geometry::SampledRegion;
use crate::{Error, Result};

/// Solutions for every element of a boundary basis, sharing one factorization.
#[derive(Clone, Debug)]
pub struct BasisSolutions {
    basis: BoundaryBasis,
    fields: Vec<SolutionField>,
}

/// Solves the Dirichlet problem once per basis element, in parallel.
pub fn basis_solutions(system: &DirichletSystem, basis: BoundaryBasis) -> Result<BasisSolutions> {
    match basis {
        BoundaryBasis::Fourier { max_degree: 0 } => {
            return Err(Error::invalid("boundary basis needs degree m ≥ 1"))
        }
        BoundaryBasis::Nodal { nodes: 0 } => return Err(Error::invalid("empty nodal basis")),
        _ => {}
    }
    let fields = (0..basis.dim())
        .into_par_iter()
        .map(|j| solve_dirichlet(system, &BoundaryDatum::unit(basis, j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisSolutions { basis, fields })
}

impl BasisSolutions {
    pub fn basis(&self) -> BoundaryBasis {
        self.basis
    }

    pub fn fields(&self) -> &[SolutionField] {
        &self.fields
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Fourier subspace of degree `max_degree` (the leading `2m + 1`
    /// elements); nodal bases are returned unchanged.
    pub fn truncated(&self, max_degree: usize) -> Result<BasisSolutions> {
        if max_degree == 0 {
            return Err(Error::invalid("boundary basis needs degree m ≥ 1"));
        }
        let basis = self.basis.truncated(max_degree);
        let mut fields = self.fields[..basis.dim()].to_vec();
        for (j, f) in fields.iter_mut().enumerate() {
            let datum = BoundaryDatum::unit(basis, j);
            *f = SolutionField::from_nodal(Arc::clone(f.mesh()), f.nodal_values().to_vec(), datum, f.regularity());
        }
        Ok(BasisSolutions { basis, fields })
    }
}

/// Boundary datum approximating an affine target on a ball, with honest
/// error accounting.
#[derive(Clone, Debug)]
pub struct RungeResult {
    pub datum: BoundaryDatum,
    /// Solution for `datum` from a fresh solve.
    pub solution: SolutionField,
    /// `max |u − t| + |∇u − ∇t|` over the ball samples.
    pub achieved_c1_error: f64,
    /// `achieved_c1_error / max (|t| + |∇t|)` over the ball samples.
    pub relative_c1_error: f64,
    /// Unregularized discrete H¹ misfit of the least-squares fit.
    pub residual_norm: f64,
    pub modes_used: usize,
    /// Absolute Tikhonov weight.
    pub delta: f64,
    /// Relative error above the requested tolerance.
    pub approximation_poor: bool,
}

/// JSON form: `{modes, delta, achieved_c1_error, residual, …}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RungeSummary {
    pub modes: usize,
    pub delta: f64,
    pub achieved_c1_error: f64,
    pub relative_c1_error: f64,
    pub residual: f64,
    pub approximation_poor: bool,
}

impl RungeResult {
    pub fn summary(&self) -> RungeSummary {
        RungeSummary {
            modes: self.modes_used,
            delta: self.delta,
            achieved_c1_error: self.achieved_c1_error,
            relative_c1_error: self.relative_c1_error,
            residual: self.residual_norm,
            approximation_poor: self.approximation_poor,
        }
    }
}

/// `(max |u − t| + |∇u − ∇t|, max |t| + |∇t|)` over the samples of `ball`.
pub(crate) fn c1_error(sol: &SolutionField, target: &AffineTarget, ball: &SampledRegion) -> (f64, f64) {
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    let tgrad = target.gradient;
    for (&p, &t) in ball.points().iter().zip(ball.containing_triangle()) {
        let g = sol.gradient(t);
        let e = (sol.value_in(t, p) - target.value(p)).abs() + (g[0] - tgrad[0]).hypot(g[1] - tgrad[1]);
        err = err.max(e);
        scale = scale.max(target.value(p).abs() + tgrad[0].hypot(tgrad[1]));
    }
    (err, scale)
}

/// Minimizes `Σ_ball |u − t|² + |∇u − ∇t|² + δ‖c‖²` over data `g = Σ c_j e_j`,
/// with `δ = delta_rel · max diag(AᵀA)`.
pub fn runge_approximate(
    system: &DirichletSystem,
    basis: &BasisSolutions,
    target: &AffineTarget,
    ball: &SampledRegion,
    delta_rel: f64,
    tolerance: f64,
) -> Result<RungeResult> {
    if !(delta_rel > 0.0) {
        return Err(Error::invalid(format!("regularization must be positive, got {delta_rel}")));
    }
    if ball.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let m = basis.dim();
    if m == 0 {
        return Err(Error::invalid("empty boundary basis"));
    }
    if ball.mesh_fingerprint() != system.mesh().fingerprint() {
        return Err(Error::RegionMismatch);
    }
    let s = ball.len();
    let mut a = DMatrix::<f64>::zeros(3 * s, m);
    let mut b = DVector::<f64>::zeros(3 * s);
    for (row, (&p, &t)) in ball.points().iter().zip(ball.containing_triangle()).enumerate() {
        for (j, f) in basis.fields().iter().enumerate() {
            let g = f.gradient(t);
            a[(3 * row, j)] = f.value_in(t, p);
            a[(3 * row + 1, j)] = g[0];
            a[(3 * row + 2, j)] = g[1];
        }
        b[3 * row] = target.value(p);
        b[3 * row + 1] = target.gradient[0];
        b[3 * row + 2] = target.gradient[1];
    }
    let mut normal = a.transpose() * &a;
    let rhs = a.transpose() * &b;
    let delta = delta_rel * (0..m).map(|j| normal[(j, j)]).fold(0.0, f64::max);
    for j in 0..m {
        normal[(j, j)] += delta;
    }
    let coeffs = match normal.cholesky() {
        Some(ch) => ch.solve(&rhs),
        // δ = 0 diagonal (all basis solutions vanish on the ball)
        None => DVector::zeros(m),
    };
    let residual_norm = (&a * &coeffs - &b).norm();
    let datum = BoundaryDatum::new(basis.basis(), coeffs.iter().copied().collect())?;
    let solution = solve_dirichlet(system, &datum)?;
    let (achieved, scale) = c1_error(&solution, target, ball);
    let relative = if scale > 0.0 { achieved / scale } else { achieved };
    Ok(RungeResult {
        datum,
        solution,
        achieved_c1_error: achieved,
        relative_c1_error: relative,
        residual_norm,
        modes_used: m,
        delta,
        approximation_poor: relative > tolerance,
    })
}
