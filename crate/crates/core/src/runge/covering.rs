use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{local_family, runge_approximate, BasisSolutions, RungeSummary};
use crate::constraints::{candidate_margin, singular_margin, tuple_det, ConstraintMap, RegularityPolicy, SolutionFamily};
use crate::elliptic::DirichletSystem;
use crate::geometry::{sample_ball, SampledRegion, XY};
use crate::{Error, Point, Result};

/// Ball radius, Tikhonov factor and relative C¹ tolerance of the Runge step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringParams {
    pub radius: f64,
    pub delta_rel: f64,
    pub tolerance: f64,
}

impl CoveringParams {
    /// `r = 15·h` capped at `0.15` times the domain inradius.
    pub fn default_radius(h_target: f64, inradius: f64) -> f64 {
        (15.0 * h_target).min(0.15 * inradius)
    }
}

/// One centre of the covering and the `n` global solutions built there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringGroup {
    pub center: XY,
    /// Sample index of the centre.
    pub sample: usize,
    pub runge: Vec<RungeSummary>,
    /// `det ζ` of the group at its centre (the local family has 1 there).
    pub det_at_center: f64,
    /// `1 − n(R+δ)^{n−1}δ` with `δ` the largest member C¹ error.
    pub hadamard_floor: f64,
    /// Samples first covered by this group.
    pub newly_covered: usize,
}

#[derive(Clone, Debug)]
pub struct Covering {
    /// All groups stacked in centre order: `M = n·N` members.
    pub family: SolutionFamily,
    pub groups: Vec<CoveringGroup>,
    /// Group index that covered each sample.
    pub covered_by: Vec<usize>,
}

/// JSON form of a covering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub centers: Vec<XY>,
    pub groups: usize,
    pub members: usize,
    pub min_stacked_singular_value: f64,
    #[serde(default)]
    pub per_point_candidate_margin_file: Option<String>,
    pub details: Vec<CoveringGroup>,
}

impl Covering {
    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn report(&self) -> CoveringReport {
        CoveringReport {
            centers: self.groups.iter().map(|g| g.center).collect(),
            groups: self.groups.len(),
            members: self.family.len(),
            min_stacked_singular_value: singular_margin(&self.family).min,
            per_point_candidate_margin_file: None,
            details: self.groups.clone(),
        }
    }

    /// Member indices of group `g` within [`Self::family`].
    pub fn group_indices(&self, g: usize) -> Vec<usize> {
        let n = self.n();
        (g * n..(g + 1) * n).collect()
    }

    /// Re-evaluates the covering criterion at every sample from the stored
    /// family: `|det|` of the covering group is at least half its value at
    /// the group's centre.
    pub fn verify_coverage(&self) -> bool {
        (0..self.family.sample_count()).all(|p| {
            let g = self.covered_by[p];
            let idx = self.group_indices(g);
            let at_center = tuple_det(&self.family, &idx, self.groups[g].sample).abs();
            tuple_det(&self.family, &idx, p).abs() >= 0.5 * at_center
        })
    }
}

/// Greedy covering of `K`: the first uncovered sample becomes a centre, its
/// canonical local family is approximated by global solutions on
/// `ball(centre, r)`, and every uncovered sample where the new group keeps at
/// least half of its centre determinant is marked covered.
pub fn build_covering(
    system: &DirichletSystem,
    basis: &BasisSolutions,
    region: &Arc<SampledRegion>,
    constraint: ConstraintMap,
    params: &CoveringParams,
    policy: RegularityPolicy,
) -> Result<Covering> {
    if !(params.radius > 0.0) || params.radius >= region.clearance() {
        return Err(Error::invalid(format!(
            "ball radius {} must be positive and below the region clearance {:.4}",
            params.radius,
            region.clearance()
        )));
    }
    if region.mesh_fingerprint() != system.mesh().fingerprint() {
        return Err(Error::RegionMismatch);
    }
    constraint.check_regularity(system.regularity().ell, policy)?;
    let n = constraint.n();
    let samples = region.len();
    let mut covered_by: Vec<Option<usize>> = vec![None; samples];
    let mut groups = Vec::new();
    let mut members = Vec::new();
    let all: Vec<usize> = (0..n).collect();
    while let Some(s) = covered_by.iter().position(Option::is_none) {
        let center: Point = region.points()[s];
        let local = local_family(constraint, center, params.radius);
        let ball = sample_ball(system.mesh(), center, params.radius)?;
        let results = local
            .targets
            .iter()
            .map(|t| runge_approximate(system, basis, t, &ball, params.delta_rel, params.tolerance))
            .collect::<Result<Vec<_>>>()?;
        for r in &results {
            if r.approximation_poor {
                log::warn!(
                    "Runge step at ({:.4}, {:.4}): relative C¹ error {:.3e} above tolerance {:.3e}",
                    center[0],
                    center[1],
                    r.relative_c1_error,
                    params.tolerance
                );
            }
        }
        let group = SolutionFamily::new(
            results.iter().map(|r| r.solution.clone()).collect(),
            Arc::clone(region),
            constraint,
            RegularityPolicy::Warn,
        )?;
        let det_at_center = tuple_det(&group, &all, s);
        let local_det = local.det_at(center);
        if det_at_center.abs() < 0.5 * local_det.abs() {
            return Err(Error::CoveringFailure {
                center,
                det_at_center,
                covered: covered_by.iter().filter(|c| c.is_some()).count(),
                samples,
            });
        }
        let g = groups.len();
        let mut newly = 0;
        for (p, slot) in covered_by.iter_mut().enumerate() {
            if slot.is_none() && tuple_det(&group, &all, p).abs() >= 0.5 * det_at_center.abs() {
                *slot = Some(g);
                newly += 1;
            }
        }
        let delta = results.iter().map(|r| r.achieved_c1_error).fold(0.0, f64::max);
        let r = local.max_row_norm(center);
        groups.push(CoveringGroup {
            center: center.into(),
            sample: s,
            runge: results.iter().map(|r| r.summary()).collect(),
            det_at_center,
            hadamard_floor: 1.0 - n as f64 * (r + delta).powi(n as i32 - 1) * delta,
            newly_covered: newly,
        });
        members.extend(group.into_members());
    }
    let family = SolutionFamily::new(members, Arc::clone(region), constraint, RegularityPolicy::Warn)?;
    Ok(Covering {
        family,
        groups,
        covered_by: covered_by.into_iter().map(|c| c.expect("loop ends when all are covered")).collect(),
    })
}

/// Per-sample candidate margins of a covering family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub min_margin: f64,
    pub argmin: XY,
    pub positive_fraction: f64,
    /// Discrete `C(K) = K`: every sample has a non-vanishing tuple.
    pub all_positive: bool,
    pub sample_count: usize,
    #[serde(skip)]
    pub per_point: Vec<f64>,
}

impl CandidateReport {
    /// CSV `x,y,margin`.
    pub fn margin_csv(&self, points: &[Point]) -> String {
        let mut out = String::from("x,y,margin\n");
        for (p, m) in points.iter().zip(&self.per_point) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p[0], p[1], m));
        }
        out
    }
}

pub fn candidate_report(covering: &Covering) -> Result<CandidateReport> {
    let fam = &covering.family;
    let per_point = (0..fam.sample_count())
        .map(|p| candidate_margin(fam, p))
        .collect::<Result<Vec<_>>>()?;
    let mut argmin = 0;
    for (p, &m) in per_point.iter().enumerate() {
        if m < per_point[argmin] {
            argmin = p;
        }
    }
    let positive = per_point.iter().filter(|&&m| m > 0.0).count();
    Ok(CandidateReport {
        min_margin: per_point.get(argmin).copied().unwrap_or(0.0),
        argmin: fam.region().points().get(argmin).copied().unwrap_or([f64::NAN; 2]).into(),
        positive_fraction: positive as f64 / per_point.len().max(1) as f64,
        all_positive: positive == per_point.len() && !per_point.is_empty(),
        sample_count: per_point.len(),
        per_point,
    })
}

/// Builds the covering and reports the candidate margin at every sample.
pub fn verify_candidate_set(
    system: &DirichletSystem,
    basis: &BasisSolutions,
    region: &Arc<SampledRegion>,
    constraint: ConstraintMap,
    params: &CoveringParams,
    policy: RegularityPolicy,
) -> Result<(Covering, CandidateReport)> {
    let covering = build_covering(system, basis, region, constraint, params, policy)?;
    let report = candidate_report(&covering)?;
    Ok((covering, report))
}
