use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn zoll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoll-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn run_with(dir: &Path, scenario: &str, config: Option<(&str, &str)>, extra: &[&str]) -> Output {
    let out = dir.join("out");
    let mut args = vec!["run", scenario, "--out", out.to_str().unwrap()];
    let cfg_path;
    if let Some((name, text)) = config {
        cfg_path = dir.join(name);
        fs::write(&cfg_path, text).unwrap();
        args.extend(["--config", cfg_path.to_str().unwrap()]);
    }
    args.extend(extra);
    zoll(&args)
}

#[test]
fn lists_registries() {
    let o = zoll(&["list", "manifolds"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["flat-torus", "round-sphere", "hyperbolic-disk", "conformal-torus", "perturbed-sphere", "kodaira-thurston"] {
        assert!(text.contains(name), "{name} missing");
    }
    let o = zoll(&["list", "scenarios"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 8);
}

#[test]
fn describe_known_and_unknown() {
    let o = zoll(&["describe", "period-law"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("rel_err"));
    let o = zoll(&["describe", "period-lwa"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("did you mean `period-law`"), "{}", stderr(&o));
}

#[test]
fn run_writes_outputs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "period-law", Some(("c.toml", "manifold = \"flat-torus\"\neps = [0.1, 0.2]\n")), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("eps,orbit,measured_period,predicted_period,rel_err,closure_defect\n"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
    let s = summary(&out);
    assert_eq!(s["passed"], Value::Bool(true));
    assert_eq!(s["config"]["manifold"], "flat-torus");
    assert!(s["rules"].as_array().unwrap().iter().all(|r| r["pass"] == Value::Bool(true)));
    assert!(s["schema_version"].is_string() && s["tolerances"]["integrator_tol"].is_number());
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "chern-audit", Some(("c.json", r#"{"manifold": "round-sphere", "points": 3}"#)), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("out/results.csv")).unwrap().lines().count(), 4);
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "manifold = \"round-sphere\"\neps = [0.1, 0.2]\norbits = 6\nseed = 5\n";
    let mut csvs = Vec::new();
    for workers in ["1", "3", "3"] {
        let o = run_with(dir.path(), "zoll-defect", Some(("c.toml", cfg)), &["--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        csvs.push(fs::read(dir.path().join("out/results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[1], csvs[2]);

    // a different seed changes the sampled orbits
    let o = run_with(dir.path(), "zoll-defect", Some(("c.toml", cfg)), &["--seed", "6"]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(dir.path().join("out/results.csv")).unwrap(), csvs[0]);
}

#[test]
fn failing_rule_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "z0-identity", Some(("c.toml", "manifold = \"round-sphere\"\npoints = 2\n")), &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL z0.identity"));
    assert_eq!(summary(&dir.path().join("out"))["passed"], Value::Bool(false));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("sed = 3\n", "did you mean `seed`"),
        ("orbits = 4\n", "not used"),
        ("manifold = \"round-spere\"\n", "did you mean `round-sphere`"),
        ("eps = [1.5]\n", "outside (0, 1)"),
        ("tol = 1e-3\n", "outside [1e-13"),
    ] {
        let o = run_with(dir.path(), "period-law", Some(("c.toml", text)), &[]);
        assert_eq!(code(&o), 2, "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = run_with(dir.path(), "period-lwa", None, &[]);
    assert_eq!(code(&o), 2);
    let o = run_with(dir.path(), "period-law", None, &["--config", "/nonexistent/c.toml"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn numerical_failure_exits_three_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let matrices = dir.path().join("m.txt");
    fs::write(&matrices, "rho\n0 0\n0 0\ngamma\n1 0\n0 1\n").unwrap();
    let cfg = format!("matrix_file = \"{}\"\n", matrices.display());
    let o = run_with(dir.path(), "spectral-suite", Some(("c.toml", &cfg)), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let dump: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/failure.json")).unwrap()).unwrap();
    assert!(dump["message"].is_string());
    assert!(dump["state"]["rho"].is_array());
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = zoll(&["run", "chern-audit", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn constant_conformal_factor_reports_degenerate_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "conformal-drift", Some(("c.toml", "amplitude = 0.0\n")), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&dir.path().join("out"));
    assert_eq!(s["verdict"], "degenerate drift (Zoll)");
}
