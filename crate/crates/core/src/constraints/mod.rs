//! Constraint maps `ζ` and the determinant functionals built on them.
//!
//! A family `(u₁, …, u_N)` satisfies the constraint at `x` when some ordered
//! `n`-tuple of members has `det[ζ(u_{i₁}); …; ζ(u_{iₙ})](x) ≠ 0`.

mod family;
mod margin;

use serde::{Deserialize, Serialize};

use crate::elliptic::SolutionField;
use crate::{Error, Point, Result};

pub use family::SolutionFamily;
pub use margin::{
    admissibility_margin, candidate_margin, family_rank, singular_margin, tuple_det,
    AdmissibilityReport, SingularMargin, RANK_TOLERANCE,
};

/// The three constraint maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMap {
    /// `ζ(u) = [u]`: no nodal points.
    Nodal,
    /// `ζ(u) = ∇u`: non-vanishing Jacobian.
    Jacobian,
    /// `ζ(u) = [u, ∇u]`: non-vanishing augmented Jacobian.
    Augmented,
}

impl ConstraintMap {
    /// Row length of `ζ(u)(x)`.
    pub fn n(self) -> usize {
        match self {
            ConstraintMap::Nodal => 1,
            ConstraintMap::Jacobian => 2,
            ConstraintMap::Augmented => 3,
        }
    }

    /// Hölder index `ℓ` the solutions need for `ζ` to be continuous up to `K`.
    pub fn ell_required(self) -> u8 {
        match self {
            ConstraintMap::Nodal => 0,
            ConstraintMap::Jacobian | ConstraintMap::Augmented => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstraintMap::Nodal => "nodal",
            ConstraintMap::Jacobian => "jacobian",
            ConstraintMap::Augmented => "augmented",
        }
    }

    /// Writes `ζ` of a value/gradient pair into `out` (length `n`).
    pub fn fill_row(self, value: f64, gradient: [f64; 2], out: &mut [f64]) {
        match self {
            ConstraintMap::Nodal => out[0] = value,
            ConstraintMap::Jacobian => out.copy_from_slice(&gradient),
            ConstraintMap::Augmented => out.copy_from_slice(&[value, gradient[0], gradient[1]]),
        }
    }

    /// Checks that `actual` coefficient regularity supports this map.
    pub fn check_regularity(self, actual: u8, policy: RegularityPolicy) -> Result<()> {
        let required = self.ell_required();
        if actual >= required {
            return Ok(());
        }
        match policy {
            RegularityPolicy::Reject => Err(Error::RegularityMismatch { required, actual }),
            RegularityPolicy::Warn => {
                log::warn!(
                    "{} constraint evaluated on ℓ = {actual} solutions; gradients are not Hölder up to K",
                    self.name()
                );
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for ConstraintMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nodal" => Ok(ConstraintMap::Nodal),
            "jacobian" => Ok(ConstraintMap::Jacobian),
            "augmented" => Ok(ConstraintMap::Augmented),
            other => Err(Error::Config(format!("unknown constraint `{other}`"))),
        }
    }
}

/// What to do when a gradient constraint meets `ℓ = 0` coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegularityPolicy {
    Reject,
    #[default]
    Warn,
}

/// `ζ(u)(p)` for a point `p` of triangle `t`, rejecting regularity mismatches.
pub fn zeta_row(constraint: ConstraintMap, sol: &SolutionField, t: usize, p: Point) -> Result<Vec<f64>> {
    constraint.check_regularity(sol.regularity().ell, RegularityPolicy::Reject)?;
    let mut row = vec![0.0; constraint.n()];
    constraint.fill_row(sol.value_in(t, p), sol.gradient(t), &mut row);
    Ok(row)
}
