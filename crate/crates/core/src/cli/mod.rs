//! Scenario-driven front end: TOML scenarios, the staged pipeline, the
//! openness and density experiments and field dumps.

mod config;
mod dump;
mod experiments;
mod expr;
mod pipeline;

pub use config::{aniso_angle, CoefficientSpec, RegularitySpec, ResolvedScenario, RungeSpec, ScenarioConfig};
pub use dump::{dump_fields, MemberSelector};
pub use experiments::{
    density_experiment, openness_bound, openness_experiment, DensityMode, DensityStats, DensityTrial,
    OpennessBound, OpennessStats,
};
pub use expr::Expr;
pub use pipeline::{
    run_pipeline, ExperimentReport, MeshSummary, PipelineRun, RunOptions, SolveSummary, Stage, StageError,
};
