//! Triangulated reference domains and discretized compact subsets.

mod export;
mod mesh;
mod region;

pub use export::{element_text, node_text, write_node_element, VtkWriter};
pub use mesh::{build_mesh, locate_point, DomainKind, Mesh};
pub use region::{sample_ball, sample_region, RegionDescriptor, SampledRegion};

use serde::{Deserialize, Serialize};

/// `{x, y}` form of a point, used in JSON reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XY {
    pub x: f64,
    pub y: f64,
}

impl From<crate::Point> for XY {
    fn from(p: crate::Point) -> Self {
        XY { x: p[0], y: p[1] }
    }
}
