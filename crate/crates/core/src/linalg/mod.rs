//! Linear algebra kernels shared by the solver and the constraint checks.

mod banded;
mod dense;
mod sparse;

pub use banded::{reverse_cuthill_mckee, BandedLu};
pub use dense::{det_rows, extreme_singular_values, numerical_rank, singular_values};
pub use sparse::CsrMatrix;
