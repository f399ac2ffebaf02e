use std::sync::Arc;

use rayon::prelude::*;

use super::{ConstraintMap, RegularityPolicy};
use crate::elliptic::SolutionField;
use crate::geometry::SampledRegion;
use crate::{Error, Result};

/// Ordered solutions over one mesh together with their `ζ` rows at every
/// sample of `K`.
#[derive(Clone, Debug)]
pub struct SolutionFamily {
    members: Vec<SolutionField>,
    region: Arc<SampledRegion>,
    constraint: ConstraintMap,
    /// `zeta[(p * k + i) * n + j]`: component `j` of `ζ(u_i)` at sample `p`.
    zeta: Vec<f64>,
}

impl SolutionFamily {
    pub fn new(
        members: Vec<SolutionField>,
        region: Arc<SampledRegion>,
        constraint: ConstraintMap,
        policy: RegularityPolicy,
    ) -> Result<Self> {
        for m in &members {
            if m.mesh().fingerprint() != region.mesh_fingerprint() {
                return Err(Error::RegionMismatch);
            }
            if m.datum().basis() != members[0].datum().basis() {
                return Err(Error::invalid("family members use different boundary bases"));
            }
        }
        if let Some(first) = members.first() {
            constraint.check_regularity(first.regularity().ell, policy)?;
        }
        let n = constraint.n();
        let k = members.len();
        let points = region.points();
        let tris = region.containing_triangle();
        let zeta: Vec<f64> = (0..points.len())
            .into_par_iter()
            .flat_map_iter(|p| {
                let mut rows = vec![0.0; k * n];
                for (i, m) in members.iter().enumerate() {
                    let t = tris[p];
                    constraint.fill_row(m.value_in(t, points[p]), m.gradient(t), &mut rows[i * n..(i + 1) * n]);
                }
                rows
            })
            .collect();
        Ok(SolutionFamily {
            members,
            region,
            constraint,
            zeta,
        })
    }

    pub fn members(&self) -> &[SolutionField] {
        &self.members
    }

    pub fn into_members(self) -> Vec<SolutionField> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn region(&self) -> &Arc<SampledRegion> {
        &self.region
    }

    pub fn constraint(&self) -> ConstraintMap {
        self.constraint
    }

    pub fn n(&self) -> usize {
        self.constraint.n()
    }

    pub fn sample_count(&self) -> usize {
        self.region.len()
    }

    /// The `k × n` row-major matrix `F_p` stacking `ζ(u_i)` at sample `p`.
    pub fn zeta_matrix(&self, p: usize) -> &[f64] {
        let kn = self.len() * self.n();
        &self.zeta[p * kn..(p + 1) * kn]
    }

    pub fn zeta_row(&self, i: usize, p: usize) -> &[f64] {
        let n = self.n();
        let start = (p * self.len() + i) * n;
        &self.zeta[start..start + n]
    }

    /// Members at `indices`, in that order.
    pub fn subfamily(&self, indices: &[usize]) -> SolutionFamily {
        self.map_sparse(&indices.iter().map(|&i| vec![(i, 1.0)]).collect::<Vec<_>>())
            .expect("selection of existing members")
    }

    /// Concatenation `(self, other)`; both must share region and constraint.
    pub fn stacked(&self, other: &SolutionFamily) -> Result<SolutionFamily> {
        if !Arc::ptr_eq(&self.region, &other.region)
            && (self.region.mesh_fingerprint() != other.region.mesh_fingerprint()
                || self.region.points() != other.region.points())
        {
            return Err(Error::RegionMismatch);
        }
        if self.constraint != other.constraint {
            return Err(Error::invalid("stacked families use different constraints"));
        }
        let (k1, k2, n) = (self.len(), other.len(), self.n());
        let mut zeta = Vec::with_capacity(self.zeta.len() + other.zeta.len());
        for p in 0..self.sample_count() {
            zeta.extend_from_slice(&self.zeta[p * k1 * n..(p + 1) * k1 * n]);
            zeta.extend_from_slice(&other.zeta[p * k2 * n..(p + 1) * k2 * n]);
        }
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        Ok(SolutionFamily {
            members,
            region: Arc::clone(&self.region),
            constraint: self.constraint,
            zeta,
        })
    }

    /// New family whose member `r` is `Σ_{(j, s) ∈ rows[r]} s·u_j`. By
    /// linearity of `ζ` the table is combined row-wise instead of re-evaluated.
    pub fn map_sparse(&self, rows: &[Vec<(usize, f64)>]) -> Result<SolutionFamily> {
        let (k, n) = (self.len(), self.n());
        for row in rows {
            if row.is_empty() || row.iter().any(|&(j, _)| j >= k) {
                return Err(Error::invalid("member combination out of range"));
            }
        }
        let members = rows
            .iter()
            .map(|row| {
                if let [(j, s)] = row.as_slice() {
                    if *s == 1.0 {
                        return Ok(self.members[*j].clone());
                    }
                }
                let terms: Vec<(f64, &SolutionField)> = row.iter().map(|&(j, s)| (s, &self.members[j])).collect();
                SolutionField::linear_combination(&terms)
            })
            .collect::<Result<Vec<_>>>()?;
        let k_new = rows.len();
        let mut zeta = vec![0.0; self.sample_count() * k_new * n];
        for p in 0..self.sample_count() {
            let src = &self.zeta[p * k * n..(p + 1) * k * n];
            let dst = &mut zeta[p * k_new * n..(p + 1) * k_new * n];
            for (r, row) in rows.iter().enumerate() {
                for &(j, s) in row {
                    for c in 0..n {
                        dst[r * n + c] += s * src[j * n + c];
                    }
                }
            }
        }
        Ok(SolutionFamily {
            members,
            region: Arc::clone(&self.region),
            constraint: self.constraint,
            zeta,
        })
    }
}
