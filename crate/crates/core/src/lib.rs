//! Design, verification and minimization of Dirichlet boundary data for
//! second-order elliptic equations
//!
//! ```text
//! -div(a ∇u + b u) + c·∇u + q u = 0   in Ω,     u = g   on ∂Ω
//! ```
//!
//! whose solutions satisfy a non-vanishing determinant constraint (no nodal
//! points, non-degenerate Jacobian, or non-degenerate augmented Jacobian) at
//! every sample of a compact interior set `K`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] meshes the unit disk or unit square and discretizes `K`.
//! * [`elliptic`] assembles and solves the Dirichlet problem with P1 elements.
//! * [`constraints`] evaluates the constraint maps and the determinant margins.
//! * [`runge`] builds local families, approximates them by global solutions
//!   through boundary control and covers `K` with them.
//! * [`whitney`] shrinks a covering family with random projections until the
//!   target member count is reached.
//! * [`cli`] wires everything into scenario-driven experiments.

pub mod cli;
pub mod constraints;
pub mod elliptic;
mod error;
pub mod geometry;
pub mod linalg;
pub mod runge;
pub mod whitney;

pub use error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];
