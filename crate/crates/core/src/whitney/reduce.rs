use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{draw_weights, project_family, WeightVector};
use crate::constraints::{admissibility_margin, singular_margin, AdmissibilityReport, SolutionFamily};
use crate::{Error, Result};

/// Tunables of the reduction. `scale0 = None` selects the adaptive start
/// `0.1 · margin / max_x |ζ(u_k)(x)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionParams {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale0: Option<f64>,
}

fn default_theta() -> f64 {
    0.25
}

fn default_max_tries() -> usize {
    50
}

impl Default for ReductionParams {
    fn default() -> Self {
        ReductionParams {
            theta: default_theta(),
            max_tries: default_max_tries(),
            scale0: None,
        }
    }
}

/// One committed projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    /// Member count before the step.
    pub k: usize,
    pub a: Vec<f64>,
    pub scale: f64,
    /// Rejected draws before the committed one.
    pub retries: usize,
    /// Smallest-singular-value margin after the step.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub seed: u64,
    pub target: usize,
    pub steps: Vec<ReductionStep>,
    pub initial_margin: f64,
    pub final_margin: f64,
}

pub struct StepOutcome {
    pub family: SolutionFamily,
    pub weights: WeightVector,
    pub retries: usize,
    pub margin: f64,
}

fn default_scale(family: &SolutionFamily, margin: f64) -> f64 {
    let k = family.len();
    let mut largest = 0.0f64;
    for p in 0..family.sample_count() {
        let row = family.zeta_row(k - 1, p);
        largest = largest.max(row.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    if largest > 0.0 && margin > 0.0 {
        0.1 * margin / largest
    } else {
        0.1
    }
}

/// Draws projections until one keeps rank `n` at every sample with
/// smallest-singular-value margin `≥ theta · m`, halving the scale after each
/// rejection.
pub fn reduce_step(
    family: &SolutionFamily,
    scale: f64,
    max_tries: usize,
    theta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<StepOutcome> {
    let k = family.len();
    if k <= family.n() {
        return Err(Error::invalid(format!(
            "cannot project a {k}-member family below n = {}",
            family.n()
        )));
    }
    let m = singular_margin(family).min;
    let mut scale = scale;
    let mut best: Option<(f64, crate::Point)> = None;
    for tries in 0..max_tries {
        let w = draw_weights(k, scale, rng);
        let projected = project_family(family, &w)?;
        let sm = singular_margin(&projected);
        if sm.full_rank && sm.min >= theta * m {
            return Ok(StepOutcome {
                family: projected,
                weights: w,
                retries: tries,
                margin: sm.min,
            });
        }
        if best.is_none_or(|(b, _)| sm.min > b) {
            best = Some((sm.min, sm.argmin));
        }
        scale *= 0.5;
    }
    let (margin, worst_point) = best.unwrap_or((m, [f64::NAN; 2]));
    Err(Error::ReductionExhausted {
        k,
        tries: max_tries,
        worst_point,
        margin,
        trace: None,
    })
}

/// Repeats [`reduce_step`] until `target` members remain. All draws come from
/// one ChaCha8 stream seeded with `seed`.
pub fn reduce_to_target(
    family: &SolutionFamily,
    target: usize,
    params: &ReductionParams,
    seed: u64,
) -> Result<(SolutionFamily, ReductionTrace)> {
    if target < family.n() {
        return Err(Error::invalid(format!(
            "target {target} is below n = {}; rank n needs at least n members",
            family.n()
        )));
    }
    if target > family.len() {
        return Err(Error::invalid(format!(
            "target {target} exceeds the family size {}",
            family.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_margin = singular_margin(family).min;
    let mut trace = ReductionTrace {
        seed,
        target,
        steps: Vec::new(),
        initial_margin,
        final_margin: initial_margin,
    };
    let mut current = family.clone();
    let mut margin = initial_margin;
    while current.len() > target {
        let scale = params.scale0.unwrap_or_else(|| default_scale(&current, margin));
        match reduce_step(&current, scale, params.max_tries, params.theta, &mut rng) {
            Ok(step) => {
                trace.steps.push(ReductionStep {
                    k: current.len(),
                    a: step.weights.a,
                    scale: step.weights.scale,
                    retries: step.retries,
                    margin: step.margin,
                });
                margin = step.margin;
                trace.final_margin = margin;
                current = step.family;
            }
            Err(Error::ReductionExhausted {
                k,
                tries,
                worst_point,
                margin,
                ..
            }) => {
                return Err(Error::ReductionExhausted {
                    k,
                    tries,
                    worst_point,
                    margin,
                    trace: Some(Box::new(trace)),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((current, trace))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbOptions {
    /// Bound on every `|ξ_{i,j}|`.
    pub xi_scale: f64,
    pub max_tries: usize,
    pub seed: u64,
    /// Return `h` untouched (`ξ = 0`) when it is already admissible.
    pub skip_if_admissible: bool,
}

pub struct PerturbOutcome {
    /// `h_i − ξ_{i,j} u_j`.
    pub family: SolutionFamily,
    /// `ξ`, one row per member of `h`, one column per donor.
    pub xi: Vec<Vec<f64>>,
    pub trace: ReductionTrace,
    pub report: AdmissibilityReport,
}

impl PerturbOutcome {
    pub fn max_abs_xi(&self) -> f64 {
        self.xi.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Makes `h` admissible with small donor weights: the stacked family
/// `(h, u)` is reduced back to `|h|` members, eliminating donors last to
/// first. Each step accepts any rank-preserving draw; its scale is capped at
/// `ln(1 + xi_scale)/M`, which keeps every accumulated `|ξ_{i,j}|` below
/// `(1 + ln(1 + xi_scale)/M)^M − 1 ≤ xi_scale`.
pub fn perturb_toward_admissible(
    h: &SolutionFamily,
    donors: &SolutionFamily,
    opts: &PerturbOptions,
) -> Result<PerturbOutcome> {
    if !(opts.xi_scale >= 0.0) {
        return Err(Error::invalid(format!("xi_scale must be non-negative, got {}", opts.xi_scale)));
    }
    let (t, m) = (h.len(), donors.len());
    let stacked = h.stacked(donors)?;
    if !singular_margin(&stacked).full_rank {
        return Err(Error::invalid(
            "stacked family (h, donors) does not have rank n at every sample",
        ));
    }
    if opts.skip_if_admissible && t >= h.n() {
        let report = admissibility_margin(h)?;
        if report.is_admissible() {
            let sm = singular_margin(h).min;
            return Ok(PerturbOutcome {
                family: h.clone(),
                xi: vec![vec![0.0; m]; t],
                trace: ReductionTrace {
                    seed: opts.seed,
                    target: t,
                    steps: Vec::new(),
                    initial_margin: sm,
                    final_margin: sm,
                },
                report,
            });
        }
    }
    let params = ReductionParams {
        theta: 0.0,
        max_tries: opts.max_tries,
        scale0: Some((1.0 + opts.xi_scale).ln() / m.max(1) as f64),
    };
    let (family, trace) = reduce_to_target(&stacked, t, &params, opts.seed)?;
    // replay the projections on the combination matrix to recover ξ
    let mut rows: Vec<Vec<f64>> = (0..t + m)
        .map(|i| (0..t + m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for step in &trace.steps {
        let last = rows.pop().expect("one row per member");
        for (row, &a) in rows.iter_mut().zip(&step.a) {
            for (r, l) in row.iter_mut().zip(&last) {
                *r -= a * l;
            }
        }
    }
    let xi: Vec<Vec<f64>> = rows.iter().map(|r| r[t..].iter().map(|v| -v).collect()).collect();
    let report = admissibility_margin(&family)?;
    Ok(PerturbOutcome {
        family,
        xi,
        trace,
        report,
    })
}
