use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bcdesign::cli::ScenarioConfig;
use bcdesign::constraints::ConstraintMap;
use bcdesign::geometry::DomainKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bcdesign"))
}

fn write_config(dir: &Path, preset: &str, edit: impl FnOnce(&mut ScenarioConfig)) -> PathBuf {
    let mut c = ScenarioConfig::with_preset(DomainKind::Disk, 0.1, preset, ConstraintMap::Jacobian);
    c.output_dir = dir.join("default_out");
    edit(&mut c);
    let path = dir.join("scenario.toml");
    std::fs::write(&path, c.to_toml_string().unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn pipeline_report_is_reproducible_without_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "laplace", |_| {});
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["pipeline", "--no-timings"], &cfg, out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = std::fs::read(a.join("report.json")).unwrap();
    let rb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
    assert!(!String::from_utf8_lossy(&ra).contains("timings"));
    // --out only moves the files
    assert!(!dir.path().join("default_out").exists());

    let timed = dir.path().join("timed");
    assert_eq!(code(&run(&["pipeline"], &cfg, &timed)), 0);
    let text = std::fs::read_to_string(timed.join("report.json")).unwrap();
    assert!(text.contains("\"timings\""));
}

#[test]
fn each_stage_command_stops_where_it_should() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "laplace", |_| {});
    let expect: [(&str, &[&str]); 3] = [
        ("solve", &["mesh.ele", "mesh.node", "report.json", "solve.json"]),
        (
            "cover",
            &["candidate_margins.csv", "covering.json", "mesh.ele", "mesh.node", "report.json", "solve.json"],
        ),
        (
            "reduce",
            &[
                "candidate_margins.csv",
                "covering.json",
                "mesh.ele",
                "mesh.node",
                "reduction.json",
                "report.json",
                "solve.json",
            ],
        ),
    ];
    for (cmd, files) in expect {
        let out = dir.path().join(cmd);
        let o = run(&[cmd, "--no-timings"], &cfg, &out);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(listing(&out), files, "{cmd}");
        let report = std::fs::read_to_string(out.join("report.json")).unwrap();
        assert!(report.contains(&format!("\"{cmd}\"")), "{cmd}");
    }
}

#[test]
fn dump_writes_selected_members() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "laplace", |_| {});
    let out = dir.path().join("some");
    let o = run(&["dump", "--no-timings", "--members", "0,2"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names = listing(&out);
    for f in ["member_0.csv", "member_2.csv", "margins.csv", "family.vtk"] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    assert!(!names.iter().any(|n| n == "member_1.csv"));

    let out = dir.path().join("bad");
    let o = run(&["dump", "--members", "0,9"], &cfg, &out);
    assert_eq!(code(&o), 2);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();

    // invalid Hölder exponent: configuration error, nothing written
    let cfg = write_config(dir.path(), "laplace", |c| c.regularity.alpha = Some(1.5));
    let out = dir.path().join("alpha");
    let o = run(&["pipeline"], &cfg, &out);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!out.exists());

    // unknown key
    let bad = dir.path().join("unknown.toml");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("seed", "sead");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&run(&["pipeline"], &bad, &out)), 2);

    // missing file
    assert_eq!(code(&run(&["pipeline"], &dir.path().join("absent.toml"), &out)), 4);

    // rough coefficients with a tiny Fourier basis cannot cover the region
    let cfg = write_config(dir.path(), "rough-l0", |c| {
        c.h_target = 0.05;
        c.runge.m = 2;
    });
    let out = dir.path().join("rough");
    let o = run(&["pipeline"], &cfg, &out);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cover"));
    assert!(out.join("solve.json").exists());

    // output location blocked by a regular file
    let cfg = write_config(dir.path(), "laplace", |_| {});
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    assert_eq!(code(&run(&["pipeline"], &cfg, &blocker.join("x"))), 4);
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "laplace", |_| {});
    let out = dir.path().join("seeded");
    let o = bin()
        .args(["solve", "--no-timings", "--seed", "17", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"]["seed"], 17);
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ScenarioConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
