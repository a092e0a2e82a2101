//! End-to-end tests of the `stirap` binary: exit codes, output layout,
//! environment handling and byte-stable artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

// ============================================================================
// Helpers
// ============================================================================

/// Small but physically valid scenario; `patch` replaces whole lines.
fn scenario_text(patch: &[(&str, &str)]) -> String {
    let mut text = String::from(
        r#"version = 1
name = "cli-test"
seed = 7

[units]
speed_of_light = 100.0

[atom]
mass = 100.0
e0 = 0.0
e1 = 5.0
e2 = 1000.0

[packet]
center = 0.0
momentum = 200.0
dx2 = 1.0
state = "g0"

[grid]
points = 41
y_m = 3.0

[plan]
decelerating_steps = 1

[plan.design]
shape = "gaussian"
amplitude = 400.0
duration = 1.0
width = 0.25
delay = 0.45
gap = 0.3

[bounds]
epsilon_target = 0.05
mesh_intervals = 512

[integrator]
tol = 1e-10

[sweep]
axis = "omega_scale"
values = [1.0, 2.0]
points = 5

[verify]
slices = 11
"#,
    );
    for (from, to) in patch {
        assert!(text.contains(from), "patch target {from:?} missing");
        text = text.replace(from, to);
    }
    text
}

fn write_scenario(dir: &Path, patch: &[(&str, &str)]) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, scenario_text(patch)).unwrap();
    path
}

fn stirap(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stirap"));
    cmd.args(args).env_remove("STIRAP_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("STIRAP_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// ============================================================================
// Tests
// ============================================================================

#[test]
fn verify_list_needs_no_config() {
    let o = stirap(&["verify", "--list"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("bound_validity"));
}

#[test]
fn missing_or_malformed_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&stirap(&["run"], None)), 2);
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&stirap(&["run", "--config", s(&missing)], None)), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "version = 1\nunknown_key = 3\n").unwrap();
    assert_eq!(code(&stirap(&["run", "--config", s(&bad)], None)), 2);
    let future = write_scenario(dir.path(), &[("version = 1", "version = 99")]);
    assert_eq!(code(&stirap(&["run", "--config", s(&future)], None)), 2);
}

#[test]
fn zero_duration_and_bad_tolerance_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[("duration = 1.0", "duration = 0.0")]);
    let o = stirap(&["bounds", "--config", s(&cfg), "--out", s(dir.path())], None);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = write_scenario(dir.path(), &[]);
    let o = stirap(&["bounds", "--config", s(&cfg), "--out", s(dir.path()), "--tol", "1e-3"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn unverifiable_precision_fails_verify_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[("epsilon_target = 0.05", "epsilon_target = 1e-8")]);
    let o = stirap(
        &["verify", "--config", s(&cfg), "--out", s(dir.path()), "--tol", "1e-6", "--check", "precision_ordering"],
        None,
    );
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("FAIL precision_ordering"));
    assert!(dir.path().join("verify_report.toml").exists());
}

#[test]
fn run_writes_versioned_tables_and_frames_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[]);
    let out = dir.path().join("out");
    let o = stirap(&["run", "--config", s(&cfg), "--out", s(&out), "--frames", "both", "--threads", "2"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert!(lines.next().unwrap().starts_with("# stirap "));
    assert_eq!(
        lines.next().unwrap(),
        "t [time],z [length],p [momentum],epsilon [length],phase [rad],state [-]"
    );
    assert!(out.join("trajectory_oracle.csv").exists());

    let eff = std::fs::read_to_string(out.join("slice_efficiency.csv")).unwrap();
    let rows: Vec<Vec<f64>> = eff
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    for r in rows {
        assert!((r[3] - r[4]).abs() <= 10.0 * 1e-10, "frames disagree: {r:?}");
    }
    let summary = std::fs::read_to_string(out.join("run_summary.toml")).unwrap();
    assert!(summary.starts_with("# stirap "));
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[]);
    let env_out = dir.path().join("from-env");
    let o = stirap(&["bounds", "--config", s(&cfg)], Some(&env_out));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env_out.join("bounds.csv").exists());
    assert!(env_out.join("bounds_report.toml").exists());

    let flag_out = dir.path().join("from-flag");
    let o = stirap(&["bounds", "--config", s(&cfg), "--out", s(&flag_out)], Some(&env_out));
    assert_eq!(code(&o), 0);
    assert!(flag_out.join("bounds.csv").exists());
}

#[test]
fn outputs_are_byte_stable_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        for cmd in ["run", "bounds", "sweep"] {
            let o = stirap(&[cmd, "--config", s(&cfg), "--out", s(out), "--threads", threads], None);
            assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for name in [
        "trajectory.csv",
        "trajectory_oracle.csv",
        "slice_efficiency.csv",
        "run_summary.toml",
        "bounds.csv",
        "bounds_report.toml",
        "sweep_omega_scale.csv",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn verify_passes_on_valid_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), &[]);
    let o = stirap(&["verify", "--config", s(&cfg), "--out", s(dir.path()), "--seed", "11"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 10);
}
