use std::path::PathBuf;

use thiserror::Error;

use crate::whitney::ReductionTrace;
use crate::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh generation failed: {0}")]
    MeshFailure(String),

    #[error("no sample point falls inside the requested region")]
    EmptyRegion,

    #[error("region touches the domain boundary (clearance {clearance:.3e})")]
    BoundaryContact { clearance: f64 },

    #[error("region and solution live on different meshes")]
    RegionMismatch,

    #[error("ellipticity check failed at ({:.4}, {:.4}): smallest eigenvalue {eigenvalue:.4e} < claimed {claimed:.4e}", point[0], point[1])]
    NotElliptic {
        point: Point,
        eigenvalue: f64,
        claimed: f64,
    },

    /// The interior Dirichlet matrix is numerically singular, i.e. the
    /// boundary value problem is not uniquely solvable on this mesh.
    #[error("singular Dirichlet system (condition estimate {condition_estimate:.3e})")]
    SingularSystem { condition_estimate: f64 },

    #[error("constraint needs ℓ = {required} solutions but the coefficients are ℓ = {actual}")]
    RegularityMismatch { required: u8, actual: u8 },

    #[error("family has {members} members, constraint needs at least {n}")]
    TooFewMembers { members: usize, n: usize },

    #[error("no acceptable weights after {tries} tries at k = {k}: best margin {margin:.3e} (worst point ({:.4}, {:.4}))", worst_point[0], worst_point[1])]
    ReductionExhausted {
        k: usize,
        tries: usize,
        worst_point: Point,
        margin: f64,
        trace: Option<Box<ReductionTrace>>,
    },

    #[error("covering failed at ({:.4}, {:.4}): |det| = {det_at_center:.3e} at the group's own center", center[0], center[1])]
    CoveringFailure {
        center: Point,
        det_at_center: f64,
        covered: usize,
        samples: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for the numerical failures that the command line maps to exit code 3.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::ReductionExhausted { .. }
                | Error::CoveringFailure { .. }
                | Error::NotElliptic { .. }
                | Error::MeshFailure(_)
                | Error::EmptyRegion
                | Error::TooFewMembers { .. }
        )
    }
}
