//! Local-to-global construction: canonical local families, their
//! approximation by global solutions through boundary control, and the greedy
//! covering of `K`.

mod approx;
mod covering;

use crate::constraints::ConstraintMap;
use crate::linalg::det_rows;
use crate::Point;

pub use approx::{basis_solutions, runge_approximate, BasisSolutions, RungeResult, RungeSummary};
pub use covering::{
    build_covering, candidate_report, verify_candidate_set, CandidateReport, Covering, CoveringGroup,
    CoveringParams, CoveringReport,
};

/// Affine function `value0 + gradient · x`. Second derivatives vanish, so it
/// solves every constant-coefficient divergence-form equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineTarget {
    pub value0: f64,
    pub gradient: [f64; 2],
}

impl AffineTarget {
    pub fn value(&self, p: Point) -> f64 {
        self.value0 + self.gradient[0] * p[0] + self.gradient[1] * p[1]
    }

    pub const ONE: AffineTarget = AffineTarget {
        value0: 1.0,
        gradient: [0.0, 0.0],
    };
    pub const X1: AffineTarget = AffineTarget {
        value0: 0.0,
        gradient: [1.0, 0.0],
    };
    pub const X2: AffineTarget = AffineTarget {
        value0: 0.0,
        gradient: [0.0, 1.0],
    };
}

/// The `n` canonical local solutions attached to a centre.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFamily {
    pub center: Point,
    pub radius: f64,
    pub constraint: ConstraintMap,
    pub targets: Vec<AffineTarget>,
}

impl LocalFamily {
    /// Stacked `ζ` rows of the targets at `p`, row-major `n × n`.
    pub fn zeta_matrix(&self, p: Point) -> Vec<f64> {
        let n = self.constraint.n();
        let mut m = vec![0.0; n * n];
        for (i, t) in self.targets.iter().enumerate() {
            self.constraint.fill_row(t.value(p), t.gradient, &mut m[i * n..(i + 1) * n]);
        }
        m
    }

    pub fn det_at(&self, p: Point) -> f64 {
        let n = self.constraint.n();
        let m = self.zeta_matrix(p);
        let rows: Vec<&[f64]> = m.chunks(n).collect();
        det_rows(&rows)
    }

    /// Largest 2-norm of a `ζ` row at `p`.
    pub fn max_row_norm(&self, p: Point) -> f64 {
        let n = self.constraint.n();
        self.zeta_matrix(p)
            .chunks(n)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `(1)` for nodal, `(x₁, x₂)` for jacobian, `(1, x₁, x₂)` for augmented; the
/// stacked `ζ` determinant is 1 everywhere.
pub fn local_family(constraint: ConstraintMap, center: Point, radius: f64) -> LocalFamily {
    let targets = match constraint {
        ConstraintMap::Nodal => vec![AffineTarget::ONE],
        ConstraintMap::Jacobian => vec![AffineTarget::X1, AffineTarget::X2],
        ConstraintMap::Augmented => vec![AffineTarget::ONE, AffineTarget::X1, AffineTarget::X2],
    };
    LocalFamily {
        center,
        radius,
        constraint,
        targets,
    }
}
