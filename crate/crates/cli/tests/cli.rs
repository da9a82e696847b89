//! End-to-end tests of the `catchup` binary: artifact contents, exit
//! codes, and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_catchup"))
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn last_data_row(csv: &str) -> Vec<f64> {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn play_scenario_final_row_hits_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "play.scn",
        "problem sweeping\nhorizon 2\nset moving-box -1 1 velocity 1\n\
         knot 0 0\nknot 2 2\nu0 0\ntol 1e-3\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let row = last_data_row(&csv);
    assert!((row[0] - 2.0).abs() < 1e-12, "final time {}", row[0]);
    assert!((row[1] - 1.0).abs() < 5e-3, "final state {}", row[1]);
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn zero_drift_skorohod_keeps_both_columns_equal() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "sk.scn",
        "problem skorohod\nhorizon 1\nset box 0 inf\ny0 0.5\nforcing constant 0\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = fs::read_to_string(out_dir.join("pair.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[1], row[2], "X and Y diverge at t={}", row[0]);
    }
}

#[test]
fn degenerate_fractional_parameters_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    // gamma chosen so Gamma(alpha) = Gamma(alpha + gamma) makes mu0 vanish.
    let scn = write_scenario(
        dir.path(),
        "frac.scn",
        "problem fractional-bvp\nfractional alpha=1.2 gamma=0.5460441929455438 kappa=0 beta=0\n\
         zeta constant 1\n",
    );
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("degenerate"), "stderr: {err}");
}

#[test]
fn duplicate_directive_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "dup.scn",
        "problem sweeping\nset box -1 1\nset box -2 2\nu0 0\n",
    );
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn repeated_runs_give_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "atoms.scn",
        "problem sweeping\nhorizon 1\nset jump-box 0.5 0 1 2 3\natom 0.5 2.0\nu0 0.5\ntol 1e-4\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(
        &bin()
            .args(["solve"])
            .arg(&scn)
            .arg("--out")
            .arg(&a)
            .output()
            .unwrap(),
    );
    run_ok(
        &bin()
            .args(["solve"])
            .arg(&scn)
            .arg("--out")
            .arg(&b)
            .output()
            .unwrap(),
    );
    assert_eq!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn study_on_a_constant_set_reports_zero_errors() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "flat.scn",
        "problem sweeping\nset box -1 1\nu0 0.25\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["study"])
        .arg(&scn)
        .args(["--levels", "3"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = fs::read_to_string(out_dir.join("study.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let err: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(err, 0.0, "{line}");
    }
}

#[test]
fn study_errors_decrease_for_the_play_operator() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "play.scn",
        "problem sweeping\nhorizon 2\nset moving-box -1 1 velocity 1\n\
         knot 0 0\nknot 2 2\nu0 0\neps0 0.007\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["study"])
        .arg(&scn)
        .args(["--levels", "5"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let csv = fs::read_to_string(out_dir.join("study.csv")).unwrap();
    let errors: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 5);
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "errors not strictly decreasing: {errors:?}");
    }
}

#[test]
fn solver_flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "box.scn",
        "problem sweeping\nset box -1 1\nu0 0.25\ntol 1e-3\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .args(["--tol", "1e-8", "--eps0", "0.05"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(
        summary.contains("epsilon 5.0000000000000003e-2"),
        "{summary}"
    );
}

#[test]
fn exhausted_iteration_cap_exits_2_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(
        dir.path(),
        "cap.scn",
        "problem skorohod\nhorizon 1\nset box 0 inf\ny0 0.5\nforcing constant -1\n\
         max-iters 1\ntol 1e-9\n",
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["solve"])
        .arg(&scn)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("FAILED"), "{summary}");
    assert!(out_dir.join("history.csv").exists());
}

#[test]
fn selftest_passes() {
    let out = bin().args(["selftest"]).output().unwrap();
    run_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.lines().filter(|l| l.ends_with("PASS")).count() >= 5,
        "{text}"
    );
}
