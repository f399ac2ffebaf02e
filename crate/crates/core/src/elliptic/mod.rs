//! P1 finite elements for the Dirichlet problem
//! `-div(a∇u + bu) + c·∇u + qu = 0` in Ω, `u = g` on ∂Ω.

mod coefficients;
mod datum;
mod solution;
mod system;

pub use coefficients::{
    check_ellipticity, CoefficientField, EllipticityCheck, RegularityClass, ScalarField, Sym2,
    VectorField,
};
pub use datum::{fourier_mode, BoundaryBasis, BoundaryDatum};
pub use solution::{evaluate, field_csv, FieldRecord, SolutionField};
pub use system::{assemble, solve_dirichlet, AssembledSystem, DirichletSystem, SINGULAR_PIVOT_RATIO};

#[cfg(test)]
mod tests;
