use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{at, PipelineRun, Stage, StageError};
use crate::constraints::{admissibility_margin, RegularityPolicy, SolutionFamily};
use crate::elliptic::{solve_dirichlet, BoundaryDatum, DirichletSystem};
use crate::whitney::{perturb_toward_admissible, PerturbOptions, ReductionTrace};
use crate::{Error, Result};

/// Per-trial generator: one ChaCha8 stream per trial index, so parallel
/// trials draw exactly what a sequential loop would.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// Gaussian direction in coefficient space with 2-norm `norm`.
fn random_coefficients(dim: usize, norm: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x * norm / len).collect()
}

/// Constants of the perturbation bound for the final family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessBound {
    /// Largest `|ζ(u_i)(x)|` over members and samples.
    pub row_bound: f64,
    /// Largest operator norm of `coefficients ↦ ζ(solution)(x)` over samples.
    pub lipschitz: f64,
    /// Largest `δ` with `N^n · n (R + Lδ)^{n−1} Lδ ≤ margin / 2`.
    pub threshold: f64,
}

/// Every ordered tuple determinant moves by at most `n(R + Lδ)^{n−1}Lδ`
/// when each datum moves by `δ` in coefficient norm; there are at most
/// `N^n` tuples.
pub fn openness_bound(run: &PipelineRun) -> Result<OpennessBound, StageError> {
    let err = at(Stage::Openness);
    let family = run.final_family_for(Stage::Openness)?;
    let basis = run.basis_for(Stage::Openness)?;
    let margin = run
        .report
        .admissibility
        .as_ref()
        .ok_or_else(|| err(Error::invalid("verify stage has not run")))?
        .margin;
    let n = family.n();
    let basis_family = SolutionFamily::new(
        basis.fields().to_vec(),
        Arc::clone(family.region()),
        family.constraint(),
        RegularityPolicy::Warn,
    )
    .map_err(&err)?;
    let dim = basis.dim();
    let lipschitz = (0..basis_family.sample_count())
        .into_par_iter()
        .map(|p| {
            // ‖B‖₂² is the top eigenvalue of the n×n Gram matrix BᵀB
            let b = DMatrix::from_row_slice(dim, n, basis_family.zeta_matrix(p));
            let gram = b.transpose() * &b;
            gram.symmetric_eigenvalues().max().max(0.0).sqrt()
        })
        .reduce(|| 0.0, f64::max);
    let mut row_bound = 0.0f64;
    for p in 0..family.sample_count() {
        for i in 0..family.len() {
            row_bound = row_bound.max(family.zeta_row(i, p).iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    let tuples = (family.len() as f64).powi(n as i32);
    let change = |d: f64| tuples * n as f64 * (row_bound + lipschitz * d).powi(n as i32 - 1) * lipschitz * d;
    let goal = 0.5 * margin;
    let threshold = if !(margin > 0.0) || lipschitz == 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while change(hi) < goal {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if change(mid) <= goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(OpennessBound {
        row_bound,
        lipschitz,
        threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessStats {
    pub trials: usize,
    pub delta_g: f64,
    pub bound: OpennessBound,
    pub baseline_margin: f64,
    /// `None` when no trial ran.
    pub min_margin: Option<f64>,
    pub positive_fraction: f64,
    /// Fraction of trials whose margin exceeds half the baseline.
    pub above_half_fraction: f64,
    pub trial_margins: Vec<f64>,
}

fn perturbed_margin(system: &DirichletSystem, family: &SolutionFamily, data: &[BoundaryDatum]) -> Result<f64> {
    let members = data.iter().map(|d| solve_dirichlet(system, d)).collect::<Result<Vec<_>>>()?;
    let fam = SolutionFamily::new(members, Arc::clone(family.region()), family.constraint(), RegularityPolicy::Warn)?;
    Ok(admissibility_margin(&fam)?.margin)
}

/// Moves every final datum by a random coefficient vector of norm `delta_g`,
/// re-solves and records the admissibility margin, once per trial.
pub fn openness_experiment(
    run: &PipelineRun,
    trials: usize,
    delta_g: f64,
    seed: u64,
) -> Result<OpennessStats, StageError> {
    let err = at(Stage::Openness);
    if !(delta_g >= 0.0) {
        return Err(err(Error::invalid(format!("delta_g must be non-negative, got {delta_g}"))));
    }
    let bound = openness_bound(run)?;
    let system = run.system_for(Stage::Openness)?;
    let family = run.final_family_for(Stage::Openness)?;
    let baseline_margin = run.report.admissibility.as_ref().map_or(f64::NAN, |a| a.margin);
    let trial_margins = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let data: Vec<BoundaryDatum> = family
                .members()
                .iter()
                .map(|m| {
                    let d = m.datum();
                    let shift = random_coefficients(d.coefficients().len(), delta_g, &mut rng);
                    let c = d.coefficients().iter().zip(&shift).map(|(a, b)| a + b).collect();
                    BoundaryDatum::new(d.basis(), c)
                })
                .collect::<Result<_>>()?;
            perturbed_margin(system, family, &data)
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(&err)?;
    let count = |pred: &dyn Fn(f64) -> bool| trial_margins.iter().filter(|&&m| pred(m)).count();
    let frac = |k: usize| if trials == 0 { 1.0 } else { k as f64 / trials as f64 };
    Ok(OpennessStats {
        trials,
        delta_g,
        bound,
        baseline_margin,
        min_margin: trial_margins.iter().copied().reduce(f64::min),
        positive_fraction: frac(count(&|m| m > 0.0)),
        above_half_fraction: frac(count(&|m| m > 0.5 * baseline_margin)),
        trial_margins,
    })
}

/// How random families are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Independent standard normal coefficients, normalized.
    #[default]
    Random,
    /// Signed copies of one random datum: rank one everywhere, never
    /// admissible for `n ≥ 2`.
    Collinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTrial {
    pub index: usize,
    pub success: bool,
    pub already_admissible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_abs_xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Reduction trace, whenever the reduction ran (failures included).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ReductionTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityStats {
    pub families: usize,
    pub members_per_family: usize,
    pub donors: usize,
    pub xi_scale: f64,
    pub mode: DensityMode,
    pub successes: usize,
    pub already_admissible: usize,
    pub success_fraction: f64,
    /// Mean over successful families of the mean `|ξ_{i,j}|`.
    pub mean_abs_xi: f64,
    pub max_abs_xi: f64,
    pub trials: Vec<DensityTrial>,
}

fn normalized(family: &SolutionFamily) -> Result<SolutionFamily> {
    let rows: Vec<Vec<(usize, f64)>> = family
        .members()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let norm = m.datum().coefficient_norm();
            vec![(i, if norm > 0.0 { 1.0 / norm } else { 0.0 })]
        })
        .collect();
    family.map_sparse(&rows)
}

/// Draws `families` random unit-norm families of `target_count` members and
/// asks [`perturb_toward_admissible`] to make each admissible with donor
/// weights `|ξ| ≤ xi_scale`, the donors being the unit-normalized covering
/// family. Failures are recorded, not raised.
pub fn density_experiment(
    run: &PipelineRun,
    families: usize,
    xi_scale: f64,
    seed: u64,
    mode: DensityMode,
) -> Result<DensityStats, StageError> {
    let err = at(Stage::Density);
    let system = run.system_for(Stage::Density)?;
    let basis = run.basis_for(Stage::Density)?;
    let covering = run.covering_for(Stage::Density)?;
    let donors = normalized(&covering.family).map_err(&err)?;
    let t = run.report.target_count;
    let max_tries = run.report.scenario.reduction.max_tries;
    let dim = basis.dim();
    let kind = basis.basis();
    let trials: Vec<DensityTrial> = (0..families)
        .into_par_iter()
        .map(|f| {
            let mut rng = trial_rng(seed, f);
            let data: Vec<Vec<f64>> = match mode {
                DensityMode::Random => (0..t).map(|_| random_coefficients(dim, 1.0, &mut rng)).collect(),
                DensityMode::Collinear => {
                    let g = random_coefficients(dim, 1.0, &mut rng);
                    (0..t)
                        .map(|_| {
                            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            g.iter().map(|v| s * v).collect()
                        })
                        .collect()
                }
            };
            let attempt = || -> Result<_> {
                let members = data
                    .into_iter()
                    .map(|c| solve_dirichlet(system, &BoundaryDatum::new(kind, c)?))
                    .collect::<Result<Vec<_>>>()?;
                let h = SolutionFamily::new(
                    members,
                    Arc::clone(donors.region()),
                    donors.constraint(),
                    RegularityPolicy::Warn,
                )?;
                let opts = PerturbOptions {
                    xi_scale,
                    max_tries,
                    seed: seed.wrapping_add(f as u64),
                    skip_if_admissible: true,
                };
                perturb_toward_admissible(&h, &donors, &opts)
            };
            match attempt() {
                Ok(out) => {
                    let count = out.xi.iter().map(Vec::len).sum::<usize>().max(1);
                    let mean = out.xi.iter().flatten().map(|v| v.abs()).sum::<f64>() / count as f64;
                    let already = out.trace.steps.is_empty() && out.report.is_admissible();
                    DensityTrial {
                        index: f,
                        success: out.report.is_admissible() && out.max_abs_xi() <= xi_scale,
                        already_admissible: already,
                        max_abs_xi: Some(out.max_abs_xi()),
                        mean_abs_xi: Some(mean),
                        margin: Some(out.report.margin),
                        error: None,
                        trace: Some(out.trace),
                    }
                }
                Err(e) => {
                    let trace = match &e {
                        Error::ReductionExhausted { trace, .. } => trace.as_deref().cloned(),
                        _ => None,
                    };
                    DensityTrial {
                        index: f,
                        success: false,
                        already_admissible: false,
                        max_abs_xi: None,
                        mean_abs_xi: None,
                        margin: None,
                        error: Some(e.to_string()),
                        trace,
                    }
                }
            }
        })
        .collect();
    let ok: Vec<&DensityTrial> = trials.iter().filter(|t| t.success).collect();
    Ok(DensityStats {
        families,
        members_per_family: t,
        donors: donors.len(),
        xi_scale,
        mode,
        successes: ok.len(),
        already_admissible: trials.iter().filter(|t| t.already_admissible).count(),
        success_fraction: if families == 0 { 1.0 } else { ok.len() as f64 / families as f64 },
        mean_abs_xi: if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter_map(|t| t.mean_abs_xi).sum::<f64>() / ok.len() as f64
        },
        max_abs_xi: ok.iter().filter_map(|t| t.max_abs_xi).fold(0.0, f64::max),
        trials,
    })
}
