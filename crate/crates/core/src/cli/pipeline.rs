use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ResolvedScenario, ScenarioConfig};
use super::experiments::{DensityStats, OpennessStats};
use crate::constraints::{admissibility_margin, AdmissibilityReport, RegularityPolicy, SolutionFamily};
use crate::elliptic::{assemble, check_ellipticity, BoundaryBasis, BoundaryDatum, DirichletSystem, SolutionField};
use crate::geometry::{build_mesh, sample_region, write_node_element, Mesh, SampledRegion};
use crate::runge::{basis_solutions, verify_candidate_set, BasisSolutions, CandidateReport, Covering, CoveringReport};
use crate::whitney::{reduce_to_target, target_count, ReductionTrace};
use crate::{Error, Result};

/// Pipeline stages, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Mesh,
    Region,
    Assemble,
    Solve,
    Cover,
    Reduce,
    Verify,
    Openness,
    Density,
    Dump,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Mesh => "mesh",
            Stage::Region => "region",
            Stage::Assemble => "assemble",
            Stage::Solve => "solve",
            Stage::Cover => "cover",
            Stage::Reduce => "reduce",
            Stage::Verify => "verify",
            Stage::Openness => "openness",
            Stage::Density => "density",
            Stage::Dump => "dump",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An upstream error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    /// 2 for configuration and input errors, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match &self.source {
            Error::Io { .. } => 4,
            e if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub(crate) fn at(stage: Stage) -> impl Fn(Error) -> StageError {
    move |source| StageError { stage, source }
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub(crate) fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    write_output(dir, name, &text)
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Last stage to execute (at most [`Stage::Verify`]).
    pub until: Stage,
    pub timings: bool,
    /// Where stage outputs go; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            until: Stage::Verify,
            timings: true,
            output_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_nodes: usize,
    pub h_target: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub min_eigenvalue: f64,
    pub lambda_claim: f64,
    pub condition_estimate: f64,
    pub basis: BoundaryBasis,
    pub basis_dim: usize,
    /// Largest relative residual over the basis solutions.
    pub max_relative_residual: f64,
}

/// Machine-readable outcome of one run. Everything except `timings` is a
/// function of the scenario (seed included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioConfig,
    pub stages_completed: Vec<Stage>,
    pub target_count: usize,
    pub mesh: Option<MeshSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateReport>,
    /// Zero-datum members appended when the covering is smaller than the target.
    pub padded_members: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<AdmissibilityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub final_data: Vec<BoundaryDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openness: Option<OpennessStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityStats>,
    /// Wall-clock seconds per stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn record_time(&mut self, stage: Stage, start: Instant) {
        if let Some(t) = &mut self.timings {
            *t.entry(stage.name().to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        }
    }
}

/// Everything a completed run keeps in memory for the experiments and dumps.
pub struct PipelineRun {
    pub resolved: ResolvedScenario,
    pub mesh: Arc<Mesh>,
    pub region: Option<Arc<SampledRegion>>,
    pub system: Option<DirichletSystem>,
    pub basis: Option<BasisSolutions>,
    pub covering: Option<Covering>,
    pub final_family: Option<SolutionFamily>,
    pub report: ExperimentReport,
    pub output_dir: Option<PathBuf>,
}

impl PipelineRun {
    fn require<'a, T>(item: &'a Option<T>, what: &str, stage: Stage) -> Result<&'a T, StageError> {
        item.as_ref()
            .ok_or_else(|| at(stage)(Error::invalid(format!("{what} is not available; run the full pipeline first"))))
    }

    pub fn system_for(&self, stage: Stage) -> Result<&DirichletSystem, StageError> {
        Self::require(&self.system, "solved system", stage)
    }

    pub fn basis_for(&self, stage: Stage) -> Result<&BasisSolutions, StageError> {
        Self::require(&self.basis, "basis solutions", stage)
    }

    pub fn covering_for(&self, stage: Stage) -> Result<&Covering, StageError> {
        Self::require(&self.covering, "covering family", stage)
    }

    pub fn final_family_for(&self, stage: Stage) -> Result<&SolutionFamily, StageError> {
        Self::require(&self.final_family, "final family", stage)
    }

    /// Writes `report.json` to the output directory, if any.
    pub fn write_report(&self, stage: Stage) -> Result<(), StageError> {
        if let Some(dir) = &self.output_dir {
            write_output(dir, "report.json", &self.report.to_json()).map_err(at(stage))?;
        }
        Ok(())
    }
}

/// `build_mesh → assemble → solve → build_covering → reduce_to_target →
/// admissibility_margin`, stopping after `opts.until`. Each stage writes its
/// own outputs before the next one starts.
pub fn run_pipeline(config: &ScenarioConfig, opts: &RunOptions) -> Result<PipelineRun, StageError> {
    let resolved = config.resolve().map_err(at(Stage::Config))?;
    let out = opts.output_dir.clone();
    let n = config.constraint.n();
    let mut report = ExperimentReport {
        scenario: config.clone(),
        stages_completed: vec![Stage::Config],
        target_count: target_count(2, n, resolved.regularity.alpha),
        mesh: None,
        solve: None,
        covering: None,
        candidate: None,
        padded_members: 0,
        reduction: None,
        admissibility: None,
        final_data: Vec::new(),
        openness: None,
        density: None,
        timings: opts.timings.then(BTreeMap::new),
    };

    let start = Instant::now();
    let mesh = Arc::new(build_mesh(config.domain, config.h_target).map_err(at(Stage::Mesh))?);
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).map_err(|e| at(Stage::Mesh)(Error::io(dir, e)))?;
        write_node_element(&mesh, dir, "mesh").map_err(at(Stage::Mesh))?;
    }
    report.record_time(Stage::Mesh, start);
    report.stages_completed.push(Stage::Mesh);
    let mut run = PipelineRun {
        resolved,
        mesh,
        region: None,
        system: None,
        basis: None,
        covering: None,
        final_family: None,
        report,
        output_dir: out,
    };
    let steps = [
        Stage::Region,
        Stage::Assemble,
        Stage::Solve,
        Stage::Cover,
        Stage::Reduce,
        Stage::Verify,
    ];
    let mut assembled = None;
    for stage in steps.into_iter().take_while(|s| *s <= opts.until) {
        let start = Instant::now();
        match stage {
            Stage::Region => {
                let region = sample_region(&run.mesh, run.resolved.region.clone()).map_err(at(stage))?;
                run.region = Some(Arc::new(region));
            }
            Stage::Assemble => {
                assembled = Some(assemble(&run.mesh, &run.resolved.coefficients).map_err(at(stage))?);
            }
            Stage::Solve => solve_stage(&mut run, assembled.take().expect("assemble runs first"))?,
            Stage::Cover => cover_stage(&mut run, config)?,
            Stage::Reduce => reduce_stage(&mut run, config)?,
            Stage::Verify => verify_stage(&mut run)?,
            _ => unreachable!("not a pipeline stage"),
        }
        run.report.record_time(stage, start);
        run.report.stages_completed.push(stage);
    }
    if run.region.is_some() {
        let region = run.region.as_ref().expect("checked");
        run.report.mesh = Some(MeshSummary {
            vertices: run.mesh.vertices().len(),
            triangles: run.mesh.triangles().len(),
            boundary_nodes: run.mesh.boundary_nodes().len(),
            h_target: run.mesh.h_target(),
            samples: region.len(),
        });
    }
    run.write_report(opts.until)?;
    Ok(run)
}

fn solve_stage(run: &mut PipelineRun, assembled: crate::elliptic::AssembledSystem) -> Result<(), StageError> {
    let err = at(Stage::Solve);
    let system = assembled.factorize().map_err(&err)?;
    let basis_kind = BoundaryBasis::natural(&run.mesh, run.report.scenario.runge.m);
    let basis = basis_solutions(&system, basis_kind).map_err(&err)?;
    let max_relative_residual = basis
        .fields()
        .iter()
        .map(|f| system.relative_residual(f))
        .fold(0.0, f64::max);
    let check = check_ellipticity(&run.resolved.coefficients, &run.mesh);
    let summary = SolveSummary {
        min_eigenvalue: check.min_eigenvalue,
        lambda_claim: run.resolved.lambda,
        condition_estimate: system.condition_estimate(),
        basis: basis_kind,
        basis_dim: basis.dim(),
        max_relative_residual,
    };
    if let Some(dir) = &run.output_dir {
        write_json(dir, "solve.json", &summary).map_err(&err)?;
    }
    run.report.solve = Some(summary);
    run.system = Some(system);
    run.basis = Some(basis);
    Ok(())
}

fn cover_stage(run: &mut PipelineRun, config: &ScenarioConfig) -> Result<(), StageError> {
    let err = at(Stage::Cover);
    let region = run.region.as_ref().expect("region runs first");
    let (covering, candidate) = verify_candidate_set(
        run.system.as_ref().expect("solve runs first"),
        run.basis.as_ref().expect("solve runs first"),
        region,
        config.constraint,
        &run.resolved.covering,
        RegularityPolicy::Warn,
    )
    .map_err(&err)?;
    let mut cov_report = covering.report();
    if let Some(dir) = &run.output_dir {
        write_output(dir, "candidate_margins.csv", &candidate.margin_csv(region.points())).map_err(&err)?;
        cov_report.per_point_candidate_margin_file = Some("candidate_margins.csv".into());
        write_json(dir, "covering.json", &cov_report).map_err(&err)?;
    }
    if !candidate.all_positive {
        log::warn!(
            "candidate margin vanishes at {:.1}% of the samples",
            100.0 * (1.0 - candidate.positive_fraction)
        );
    }
    run.report.covering = Some(cov_report);
    run.report.candidate = Some(candidate);
    run.covering = Some(covering);
    Ok(())
}

fn reduce_stage(run: &mut PipelineRun, config: &ScenarioConfig) -> Result<(), StageError> {
    let err = at(Stage::Reduce);
    let covering = run.covering.as_ref().expect("cover runs first");
    let target = run.report.target_count;
    let mut family = covering.family.clone();
    if family.len() < target {
        // The count is an upper bound; zero members keep the stacked rank and
        // let the reduction machinery run unchanged.
        let pad = target - family.len();
        log::info!("covering has {} members, padding with {pad} zero members", family.len());
        let basis = run.basis.as_ref().expect("solve runs first").basis();
        let zero = SolutionFamily::new(
            vec![SolutionField::zero(&run.mesh, basis, run.resolved.regularity); pad],
            Arc::clone(family.region()),
            config.constraint,
            RegularityPolicy::Warn,
        )
        .map_err(&err)?;
        family = family.stacked(&zero).map_err(&err)?;
        run.report.padded_members = pad;
    }
    match reduce_to_target(&family, target, &config.reduction, config.seed) {
        Ok((reduced, trace)) => {
            if let Some(dir) = &run.output_dir {
                write_json(dir, "reduction.json", &trace).map_err(&err)?;
            }
            run.report.final_data = reduced.members().iter().map(|m| m.datum().clone()).collect();
            run.report.reduction = Some(trace);
            run.final_family = Some(reduced);
            Ok(())
        }
        Err(e) => {
            if let (Error::ReductionExhausted { trace: Some(trace), .. }, Some(dir)) = (&e, &run.output_dir) {
                // keep the partial trace for audit; the original error wins
                let _ = write_json(dir, "reduction_partial.json", trace);
            }
            Err(err(e))
        }
    }
}

fn verify_stage(run: &mut PipelineRun) -> Result<(), StageError> {
    let err = at(Stage::Verify);
    let family = run.final_family.as_ref().expect("reduce runs first");
    let mut adm = admissibility_margin(family).map_err(&err)?;
    if let Some(dir) = &run.output_dir {
        write_output(dir, "margins.csv", &adm.margin_csv(family.region().points())).map_err(&err)?;
        adm.per_point_margins_file = Some("margins.csv".into());
    }
    if !adm.is_admissible() {
        log::warn!("final family is not admissible: margin {:.3e}", adm.margin);
    }
    run.report.admissibility = Some(adm);
    Ok(())
}
