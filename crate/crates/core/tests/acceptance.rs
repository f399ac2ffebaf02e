//! Acceptance suite: one line per criterion, non-zero exit when any fails.
//!
//! Run with `cargo test --test acceptance`. The workspace test profile is
//! optimized, which the runtime limits assume.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bcdesign::cli::{
    density_experiment, openness_bound, openness_experiment, run_pipeline, DensityMode, PipelineRun, RunOptions,
    ScenarioConfig, Stage,
};
use bcdesign::constraints::{admissibility_margin, family_rank, ConstraintMap, RegularityPolicy, SolutionFamily, RANK_TOLERANCE};
use bcdesign::elliptic::{
    solve_dirichlet, BoundaryBasis, BoundaryDatum, CoefficientField, DirichletSystem, RegularityClass, Sym2,
};
use bcdesign::geometry::{build_mesh, sample_ball, sample_region, DomainKind, Mesh, RegionDescriptor, SampledRegion};
use bcdesign::runge::{basis_solutions, runge_approximate, AffineTarget};
use bcdesign::whitney::{bad_weight_at, draw_weights, project_family};

type Outcome = Result<String, String>;

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn k_region(mesh: &Mesh) -> Arc<SampledRegion> {
    let d = RegionDescriptor::Disk {
        center: [0.0, 0.0],
        radius: 0.5,
    };
    Arc::new(sample_region(mesh, d).expect("disk(0, 0.5) fits the unit disk"))
}

/// Fourier datum of an affine function `c0 + c1 x1 + c2 x2` on the unit circle.
fn affine_datum(c0: f64, c1: f64, c2: f64) -> BoundaryDatum {
    BoundaryDatum::fourier(1, vec![c0, c1, c2]).expect("three coefficients")
}

fn disk_system(coeffs: &CoefficientField, h: f64) -> (Arc<Mesh>, DirichletSystem) {
    let mesh = Arc::new(build_mesh(DomainKind::Disk, h).expect("mesh"));
    let sys = DirichletSystem::new(&mesh, coeffs).expect("solvable");
    (mesh, sys)
}

fn family_of(sys: &DirichletSystem, data: &[BoundaryDatum], region: &Arc<SampledRegion>) -> SolutionFamily {
    let members = data.iter().map(|d| solve_dirichlet(sys, d).expect("solve")).collect();
    SolutionFamily::new(members, Arc::clone(region), ConstraintMap::Jacobian, RegularityPolicy::Reject).expect("family")
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let (mesh, sys) = disk_system(&CoefficientField::laplace(), 0.05);
    let region = k_region(&mesh);
    let fam = family_of(&sys, &[affine_datum(0.0, 1.0, 0.0), affine_datum(0.0, 0.0, 1.0)], &region);
    let rep = admissibility_margin(&fam).map_err(|e| e.to_string())?;
    let worst = rep.per_point_margins.iter().map(|m| (m - 2.0).abs()).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 10.0,
        format!("max |margin − 2| = {worst:.2e} over {} samples, {secs:.2} s", rep.sample_count),
    )
}

/// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
const RADON7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

fn criterion_2() -> Outcome {
    let k = 2.0;
    let exact = move |p: [f64; 2]| (k * p[0]).sin();
    let hs = [0.2, 0.1, 0.05];
    let mut l2 = Vec::new();
    let mut grad_sup = Vec::new();
    for &h in &hs {
        let (mesh, sys) = disk_system(&CoefficientField::helmholtz(k), h);
        let sol = solve_dirichlet(&sys, &BoundaryDatum::nodal_from_fn(&mesh, exact)).map_err(|e| e.to_string())?;
        let (mut e2, mut eg) = (0.0f64, 0.0f64);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let v = tri.map(|i| mesh.vertices()[i]);
            let u = tri.map(|i| sol.nodal_values()[i]);
            for (b, w) in RADON7 {
                let p = [
                    b[0] * v[0][0] + b[1] * v[1][0] + b[2] * v[2][0],
                    b[0] * v[0][1] + b[1] * v[1][1] + b[2] * v[2][1],
                ];
                let uh = b[0] * u[0] + b[1] * u[1] + b[2] * u[2];
                e2 += w * mesh.area(t) * (uh - exact(p)).powi(2);
            }
            let g = sol.gradient(t);
            let c = mesh.barycenter(t);
            eg = eg.max((g[0] - k * (k * c[0]).cos()).hypot(g[1]));
        }
        l2.push(e2.sqrt());
        grad_sup.push(eg);
    }
    let slope = |e: &[f64]| {
        let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    };
    let (s2, sg) = (slope(&l2), slope(&grad_sup));
    check(
        (s2 - 2.0).abs() <= 0.3 && sg >= 0.7,
        format!("L² slope {s2:.3} (errors {}), gradient sup slope {sg:.3} (errors {})", sci(&l2), sci(&grad_sup)),
    )
}

fn criterion_3() -> Outcome {
    use rand::Rng;
    let (_, sys) = disk_system(&CoefficientField::helmholtz(2.0), 0.05);
    let basis = BoundaryBasis::Fourier { max_degree: 8 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut draw = || BoundaryDatum::new(basis, (0..basis.dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let (g1, g2) = (draw().unwrap(), draw().unwrap());
        let (s, t): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let combined = BoundaryDatum::linear_combination(&[(s, &g1), (t, &g2)]).unwrap();
        let u = solve_dirichlet(&sys, &combined).unwrap();
        let (u1, u2) = (solve_dirichlet(&sys, &g1).unwrap(), solve_dirichlet(&sys, &g2).unwrap());
        let scale = u.nodal_values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = u
            .nodal_values()
            .iter()
            .zip(u1.nodal_values().iter().zip(u2.nodal_values()))
            .map(|(a, (b, c))| (a - s * b - t * c).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff / scale);
    }
    check(worst <= 1e-9, format!("largest relative nodal difference {worst:.2e} over 50 pairs"))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let (mesh, sys) = disk_system(&CoefficientField::laplace(), 0.05);
    let region = k_region(&mesh);
    let fam = family_of(
        &sys,
        &[affine_datum(0.0, 1.0, 0.0), affine_datum(0.0, 0.0, 1.0), affine_datum(0.0, 1.0, 1.0)],
        &region,
    );
    let full_rank = |f: &SolutionFamily| (0..f.sample_count()).all(|p| family_rank(f, p, RANK_TOLERANCE) == 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    for _ in 0..10_000 {
        let w = draw_weights(3, 0.1, &mut rng);
        if !full_rank(&project_family(&fam, &w).map_err(|e| e.to_string())?) {
            failures += 1;
        }
    }
    let bad = bad_weight_at(&fam, 0).ok_or("no bad weight at sample 0")?;
    let detected = family_rank(&project_family(&fam, &bad).map_err(|e| e.to_string())?, 0, RANK_TOLERANCE) < 2;
    let secs = t.elapsed().as_secs_f64();
    check(
        failures == 0 && detected && secs < 30.0,
        format!("{failures} rank failures in 10⁴ draws, bad weight {:?} detected: {detected}, {secs:.1} s", bad.a),
    )
}

fn aniso_config() -> ScenarioConfig {
    let mut c = ScenarioConfig::with_preset(DomainKind::Disk, 0.05, "aniso-smooth", ConstraintMap::Jacobian);
    c.seed = 5;
    c
}

fn quiet() -> RunOptions {
    RunOptions {
        until: Stage::Verify,
        timings: false,
        output_dir: None,
    }
}

fn criterion_5(run: &Result<PipelineRun, String>, secs: f64) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    let rep = &run.report;
    let adm = rep.admissibility.as_ref().ok_or("no admissibility report")?;
    let trace = rep.reduction.as_ref().ok_or("no reduction trace")?;
    let max_retries = trace.steps.iter().map(|s| s.retries).max().unwrap_or(0);
    let covering = rep.covering.as_ref().ok_or("no covering")?;
    check(
        rep.target_count == 4 && rep.final_data.len() == 4 && adm.margin > 0.0 && max_retries < 50 && secs < 300.0,
        format!(
            "target {} = 2d, {} data, margin {:.4}, {} groups → {} members, {} steps (max retries {max_retries}), {secs:.1} s",
            rep.target_count,
            rep.final_data.len(),
            adm.margin,
            covering.groups,
            covering.members,
            trace.steps.len()
        ),
    )
}

fn criterion_6(run: &Result<PipelineRun, String>) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    let bound = openness_bound(run).map_err(|e| e.to_string())?;
    let delta_g = 0.9 * bound.threshold;
    let stats = openness_experiment(run, 100, delta_g, 6).map_err(|e| e.to_string())?;
    let kept = (stats.above_half_fraction * stats.trials as f64).round();
    check(
        stats.trials == 100 && stats.above_half_fraction == 1.0 && delta_g > 0.0,
        format!(
            "{kept}/100 keep margin > {:.4}; δg = {delta_g:.3e} (threshold {:.3e}), min margin {:.4}",
            0.5 * stats.baseline_margin,
            bound.threshold,
            stats.min_margin.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_7(run: &Result<PipelineRun, String>) -> Outcome {
    let run = run.as_ref().map_err(Clone::clone)?;
    let random = density_experiment(run, 20, 0.05, 7, DensityMode::Random).map_err(|e| e.to_string())?;
    let collinear = density_experiment(run, 20, 0.05, 7, DensityMode::Collinear).map_err(|e| e.to_string())?;
    let traced = |s: &bcdesign::cli::DensityStats| s.trials.iter().filter(|t| !t.success).all(|t| t.trace.is_some());
    check(
        random.successes >= 19 && traced(&random) && traced(&collinear),
        format!(
            "random: {}/20 ({} already admissible, max |ξ| {:.2e}); rank-one: {}/20 (max |ξ| {:.2e}); failures traced: {}",
            random.successes,
            random.already_admissible,
            random.max_abs_xi,
            collinear.successes,
            collinear.max_abs_xi,
            traced(&random) && traced(&collinear)
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for preset in ["laplace", "helmholtz k=2", "aniso-smooth"] {
        let config = ScenarioConfig::with_preset(DomainKind::Disk, 0.05, preset, ConstraintMap::Jacobian);
        let opts = RunOptions {
            until: Stage::Cover,
            ..quiet()
        };
        let run = run_pipeline(&config, &opts).map_err(|e| format!("{preset}: {e}"))?;
        let cand = run.report.candidate.as_ref().ok_or("no candidate report")?;
        ok &= cand.all_positive;
        parts.push(format!("{preset}: {:.1}% (min {:.3})", 100.0 * cand.positive_fraction, cand.min_margin));
    }
    check(ok, parts.join(", "))
}

fn criterion_9() -> Outcome {
    let pi = std::f64::consts::PI;
    let coeffs = CoefficientField::diffusion(
        move |p| Sym2::scalar(1.0 + 0.5 * (pi * p[0]).sin() * (pi * p[1]).sin()),
        0.5,
        RegularityClass::smooth(),
    );
    let (mesh, sys) = disk_system(&coeffs, 0.05);
    let full = basis_solutions(&sys, BoundaryBasis::Fourier { max_degree: 64 }).map_err(|e| e.to_string())?;
    let ball = sample_ball(&mesh, [0.0, 0.0], 0.15).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for m in [8, 16, 32, 64] {
        let basis = full.truncated(m).map_err(|e| e.to_string())?;
        let r = runge_approximate(&sys, &basis, &AffineTarget::X1, &ball, 1e-8, 0.05).map_err(|e| e.to_string())?;
        errs.push(r.relative_c1_error);
    }
    let monotone = errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    check(
        errs[2] <= 0.05 && monotone,
        format!("relative C¹ error at m = 8, 16, 32, 64: {}", sci(&errs)),
    )
}

fn criterion_10(first: &Result<PipelineRun, String>) -> Outcome {
    let first = first.as_ref().map_err(Clone::clone)?;
    let second = run_pipeline(&aniso_config(), &quiet()).map_err(|e| e.to_string())?;
    let (a, b) = (first.report.to_json(), second.report.to_json());
    check(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, t: Instant, outcome: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {n:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {n:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    };
    let t = Instant::now();
    report(1, "harmonic coordinates baseline", t, criterion_1());
    let t = Instant::now();
    report(2, "Helmholtz convergence", t, criterion_2());
    let t = Instant::now();
    report(3, "superposition", t, criterion_3());
    let t = Instant::now();
    report(4, "projection rank preservation", t, criterion_4());
    let t = Instant::now();
    let run = run_pipeline(&aniso_config(), &quiet()).map_err(|e| e.to_string());
    let secs = t.elapsed().as_secs_f64();
    report(5, "end-to-end count 2d", t, criterion_5(&run, secs));
    let t = Instant::now();
    report(6, "openness", t, criterion_6(&run));
    let t = Instant::now();
    report(7, "density", t, criterion_7(&run));
    let t = Instant::now();
    report(8, "candidate set", t, criterion_8());
    let t = Instant::now();
    report(9, "Runge surrogate quality", t, criterion_9());
    let t = Instant::now();
    report(10, "determinism", t, criterion_10(&run));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
