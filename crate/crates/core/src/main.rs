use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bcdesign::cli::{
    density_experiment, dump_fields, openness_bound, openness_experiment, run_pipeline, DensityMode, MemberSelector,
    PipelineRun, RunOptions, ScenarioConfig, Stage, StageError,
};
use bcdesign::Error;

#[derive(Parser)]
#[command(name = "bcdesign", version, about = "Design and verify Dirichlet data with non-vanishing constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave wall-clock timings out of the report, making it reproducible byte for byte.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Collinear,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh, assemble and solve for the boundary basis.
    Solve(Common),
    /// Build the covering family and verify the candidate set.
    Cover(Common),
    /// Reduce the covering family to the target count.
    Reduce(Common),
    /// Full pipeline including the final admissibility check.
    Pipeline(Common),
    /// Pipeline, then random perturbations of the final data.
    Openness {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Perturbation size in coefficient norm; defaults to half the computed threshold.
        #[arg(long)]
        delta_g: Option<f64>,
    },
    /// Pipeline, then random families made admissible with small weights.
    Density {
        #[command(flatten)]
        common: Common,
        /// Number of random families.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        xi_scale: f64,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
    },
    /// Pipeline, then CSV/VTK dumps of the final family.
    Dump {
        #[command(flatten)]
        common: Common,
        /// `all`, `none` or a comma separated list of member indices.
        #[arg(long, default_value = "all")]
        members: String,
    },
}

fn start(common: &Common, until: Stage) -> Result<(ScenarioConfig, PipelineRun), StageError> {
    let config_err = |e| StageError {
        stage: Stage::Config,
        source: e,
    };
    let mut config = ScenarioConfig::from_file(&common.config).map_err(config_err)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let opts = RunOptions {
        until,
        timings: !common.no_timings,
        output_dir: Some(common.out.clone().unwrap_or_else(|| config.output_dir.clone())),
    };
    let run = run_pipeline(&config, &opts)?;
    Ok((config, run))
}

fn execute(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Solve(c) => {
            let (_, run) = start(&c, Stage::Solve)?;
            let s = run.report.solve.as_ref().expect("solve ran");
            println!(
                "solved {} basis data, condition estimate {:.3e}, residual {:.3e}",
                s.basis_dim, s.condition_estimate, s.max_relative_residual
            );
        }
        Command::Cover(c) => {
            let (_, run) = start(&c, Stage::Cover)?;
            let cov = run.report.covering.as_ref().expect("cover ran");
            let cand = run.report.candidate.as_ref().expect("cover ran");
            println!(
                "covering: {} groups, {} members; candidate margin > 0 at {:.1}% of samples",
                cov.groups,
                cov.members,
                100.0 * cand.positive_fraction
            );
        }
        Command::Reduce(c) => {
            let (_, run) = start(&c, Stage::Reduce)?;
            let trace = run.report.reduction.as_ref().expect("reduce ran");
            println!(
                "reduced to {} members in {} steps, singular margin {:.3e}",
                trace.target,
                trace.steps.len(),
                trace.final_margin
            );
        }
        Command::Pipeline(c) => {
            let (_, run) = start(&c, Stage::Verify)?;
            print_final(&run);
        }
        Command::Openness { common, trials, delta_g } => {
            let (config, mut run) = start(&common, Stage::Verify)?;
            print_final(&run);
            let delta_g = match delta_g {
                Some(d) => d,
                None => 0.5 * openness_bound(&run)?.threshold,
            };
            let stats = openness_experiment(&run, trials, delta_g, config.seed)?;
            println!(
                "openness: δg = {:.3e} (threshold {:.3e}); margin > 0 in {:.1}%, > half baseline in {:.1}% of {} trials",
                stats.delta_g,
                stats.bound.threshold,
                100.0 * stats.positive_fraction,
                100.0 * stats.above_half_fraction,
                stats.trials
            );
            run.report.openness = Some(stats);
            run.write_report(Stage::Openness)?;
        }
        Command::Density {
            common,
            trials,
            xi_scale,
            mode,
        } => {
            let (config, mut run) = start(&common, Stage::Verify)?;
            print_final(&run);
            let mode = match mode {
                Mode::Random => DensityMode::Random,
                Mode::Collinear => DensityMode::Collinear,
            };
            let stats = density_experiment(&run, trials, xi_scale, config.seed, mode)?;
            println!(
                "density: {}/{} families admissible with |ξ| ≤ {} ({} already admissible, mean |ξ| {:.3e})",
                stats.successes, stats.families, stats.xi_scale, stats.already_admissible, stats.mean_abs_xi
            );
            run.report.density = Some(stats);
            run.write_report(Stage::Density)?;
        }
        Command::Dump { common, members } => {
            let which: MemberSelector = members.parse().map_err(|e: Error| StageError {
                stage: Stage::Config,
                source: e,
            })?;
            let (_, run) = start(&common, Stage::Verify)?;
            let dir = run.output_dir.clone().expect("the command line always sets an output directory");
            let files = dump_fields(&run, &which, &dir)?;
            println!("wrote {} files to {}", files.len(), dir.display());
        }
    }
    Ok(())
}

fn print_final(run: &PipelineRun) {
    let adm = run.report.admissibility.as_ref().expect("verify ran");
    println!(
        "{} boundary data (target {}), admissibility margin {:.6e} over {} samples",
        adm.member_count, run.report.target_count, adm.margin, adm.sample_count
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
