use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_orliczvar"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("ORLICZVAR_THREADS", "2")
        .output()
        .unwrap();
    status.status.code().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("harmonic.json");
    assert_eq!(run(&["solve", input.to_str().unwrap(), "--emit-plot-data"], dir.path()), 0);
    let r = report(dir.path());
    assert_eq!(r["certified"], true);
    assert_eq!(r["n"], 128);
    let csv = std::fs::read_to_string(dir.path().join("minimizer.csv")).unwrap();
    assert_eq!(csv.lines().count(), 129);
    let plot = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert!(plot.starts_with("t,abs_u,residual"));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "solve");
    assert_eq!(meta["exit_code"], 0);
}

#[test]
fn solve_with_grid_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("harmonic.json");
    assert_eq!(run(&["solve", "--input", input.to_str().unwrap(), "--n", "64", "--restarts", "1"], dir.path()), 0);
    assert_eq!(report(dir.path())["n"], 64);
}

#[test]
fn rejected_hypotheses_exit_two_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("forced_b.json");
    assert_eq!(run(&["solve", input.to_str().unwrap()], dir.path()), 2);
    let r = report(dir.path());
    assert_eq!(r["certified"], false);
    assert!(r["error"].as_str().unwrap().contains("hypotheses"));

    assert_eq!(run(&["solve", input.to_str().unwrap(), "--override-hypotheses"], dir.path()), 2);
    let r = report(dir.path());
    assert_eq!(r["hypotheses_overridden"], true);
    assert!(r["minimizer"].is_object());
}

#[test]
fn certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("harmonic.json");
    assert_eq!(run(&["solve", input.to_str().unwrap()], dir.path()), 0);
    let traj = dir.path().join("minimizer.csv");
    let cert = dir.path().join("cert");
    assert_eq!(run(&["certify", input.to_str().unwrap(), "--trajectory", traj.to_str().unwrap()], &cert), 0);
    assert_eq!(report(&cert)["certified"], true);
}

#[test]
fn certify_rejects_zero_path() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("zero.csv");
    let mut text = String::from("t,u1\n");
    for i in 0..32 {
        text.push_str(&format!("{},0.0\n", i as f64 / 32.0));
    }
    std::fs::write(&traj, text).unwrap();
    let input = fixture("harmonic.json");
    assert_eq!(run(&["certify", input.to_str().unwrap(), "--trajectory", traj.to_str().unwrap()], dir.path()), 2);
    assert_eq!(report(dir.path())["certified"], false);
}

#[test]
fn verify_nfunction_on_exponential() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify-nfunction", fixture("exp_phi.json").to_str().unwrap()], dir.path()), 0);
    let r = report(dir.path());
    assert_eq!(r["is_n_infinity"], true);
    assert_eq!(r["delta2"]["verdict"], "fails");
    assert_eq!(r["nabla2"]["holds"], true);
}

#[test]
fn conjugate_at_given_points() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["conjugate", fixture("power2_points.json").to_str().unwrap()], dir.path()), 0);
    let r = report(dir.path());
    assert_eq!(r["mode"], "analytic");
    let v: Vec<f64> = r["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(v, vec![0.625, 2.0, 0.0]);
}

#[test]
fn check_hypotheses_defaults() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["check-hypotheses", fixture("exp_planar.json").to_str().unwrap()], dir.path()), 0);
    assert_eq!(report(dir.path())["verdicts"].as_array().unwrap().len(), 3);
}

#[test]
fn inequalities_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("exp_phi.json");
    let args = ["inequalities", input.to_str().unwrap(), "--random", "20", "--n", "64"];
    assert_eq!(run(&args, dir.path()), 0);
    let r = report(dir.path());
    assert_eq!(r["trajectories"], 20);
    assert_eq!(r["all_passed"], 20);
}

#[test]
fn refine_tabulates_grids() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("harmonic.json");
    let args = ["refine", input.to_str().unwrap(), "--ns", "32,64", "--restarts", "1"];
    assert_eq!(run(&args, dir.path()), 0);
    assert_eq!(report(dir.path())["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_input_exits_one_without_meta() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"phi\": ").unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["solve", bad.to_str().unwrap()], &out), 1);
    assert!(!out.join("meta.json").exists());
    assert_eq!(run(&["solve", dir.path().join("missing.json").to_str().unwrap()], &out), 1);
    assert_eq!(run(&["no-such-command"], &out), 1);
}
