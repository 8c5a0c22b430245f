use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastodyn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn elastodyn")
}

const SMALL: &str = r#"
name = "small"
degree = 1

[domain]
lo = [0, 0, 0]
hi = [1, 1, 1]
cells = [2, 2, 2]

[time]
k = "3^-3"
t_final = "2/9"
c_sr = "1/3"

[material]
nu = 1
lambda = 1
mu = 1

[source]
g_c = "1/pi"
t0 = 0
center = [0.5, 0.5, 0.5]
radius = 0.6

[output]
vtk_snapshots = 2

[study]
k = ["1/9", "1/27"]
k_ref = "1/81"
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("case.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn mesh_info_reports_sizes() {
    let o = run(&["mesh-info", "--preset", "example2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let v: toml::Value = text.parse().unwrap();
    assert_eq!(v["degree"].as_integer(), Some(2));
    assert_eq!(v["vector_dofs"].as_integer(), Some(3 * 19 * 19 * 19));
    assert_eq!(v["cfl"]["passed"].as_bool(), Some(true));
}

#[test]
fn unknown_preset_is_usage_error() {
    let o = run(&["run", "--preset", "atlantis"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_and_preset_are_exclusive() {
    let o = run(&["run", "--preset", "example2", "--config", "x.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("radius = 0.6", "radius = 0.6\nwobble = 3");
    let cfg = write_config(dir.path(), &bad);
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let missing = dir.path().join("absent.toml");
    let o = run(&["run", "--config", missing.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn step_restriction_violation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("k = \"3^-3\"", "k = \"1/3\"").replace("t_final = \"2/9\"", "t_final = \"2/3\""));
    let o = run(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn small_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "monitor.csv", "scenario.csv", "stress_matrix.txt", "manifest.toml", "timings.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let monitor = fs::read_to_string(out.join("monitor.csv")).unwrap();
    // header plus n = 0..=6
    assert_eq!(monitor.lines().count(), 8);
    let vtk: Vec<_> = fs::read_dir(out.join("vtk")).unwrap().collect();
    assert!(vtk.len() >= 2);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("max displacement norm"));
}

#[test]
fn time_study_from_config_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("conv");
    let o = run(&["convergence-time", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("displacement_error"));
    assert!(out.join("convergence_time.csv").is_file());
}

#[test]
fn space_study_needs_study_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["convergence-space", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}
