use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use iga_contact::config::{RunConfig, RESOLVED_FILE};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iga-contact")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn invalid_degree_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = hertz2d_p003\ndegree = 5\n");
    let out = run(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree"));
}

#[test]
fn unknown_scenario_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = hertz4d\n");
    let out = run(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));
}

#[test]
fn missing_config_file_is_reported() {
    let out = run(&["run", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let cfg = write_config(dir.path(), "scenario = hertz2d_p003\nlevels = 3\nr0 = 10\n");
    let out = run(&[
        "run",
        "--config",
        &cfg,
        "--levels",
        "1",
        "--r0",
        "50",
        "--threads",
        "1",
        "--vtk",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let conv = fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    assert!(conv.starts_with("level,h,l2_disp,h1_disp,l2_mult_analytical,l2_mult_refined"));
    assert_eq!(conv.lines().count(), 3);

    let profile = fs::read_to_string(out_dir.join("pressure_profile.csv")).unwrap();
    assert!(profile.starts_with("r_over_a,p_over_p0_numeric,p_over_p0_analytic"));
    assert!(profile.lines().count() > 1);
    assert!(fs::read_to_string(out_dir.join("solution.vtk")).unwrap().starts_with("# vtk DataFile"));

    // flags win over the file, and the echoed configuration parses back
    let text = fs::read_to_string(out_dir.join(RESOLVED_FILE)).unwrap();
    let resolved = RunConfig::parse(&text).unwrap();
    assert_eq!(resolved.levels, 1);
    assert_eq!(resolved.r0, 50.0);
    assert_eq!(resolved.out, out_dir);
    assert_eq!(RunConfig::parse(&resolved.emit()).unwrap(), resolved);
}
