//! End-to-end CLI checks through the built binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-lsq"))
}

#[test]
fn run_case_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--case", "ex1", "--W", "2..6"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("ex1.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(csv.starts_with("case,W,err_u_H1,err_p_L2,err_c_L2,iterations,wall_time"));
    assert!(dir.path().join("ex1_plot.dat").exists());
}

#[test]
fn run_ex3_meets_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--case", "ex3", "--W", "6"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("ex3.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let err_u: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(err_u <= 1e-5, "err_u at W=6: {err_u}");
}

#[test]
fn config_errors_exit_2() {
    let out = bin().args(["run", "--case", "b19"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Config file with an unknown family.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        r#"
[domain]
dim = 2
blocks = [[0.0, 0.0, 1.0, 1.0]]
[[bc]]
family = "B19"
tags = [["xmin", "xmax", "ymin", "ymax"]]
[solve]
W = [2]
"#,
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("B19"), "stderr: {stderr}");
    // Both --case and --config rejected.
    let out = bin()
        .args(["run", "--case", "ex1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_config_runs_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.toml");
    std::fs::write(
        &cfg,
        format!(
            r#"
[problem]
name = "lshape-b5"
[domain]
dim = 2
blocks = [[-1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0], [-1.0, -1.0, 0.0, 0.0]]
[[domain.tags]]
tag = "wall"
[[bc]]
family = "B5"
tags = [["wall"]]
[exact]
u1 = "x2 - x2^3"
u2 = "x1 - x1^3"
p = "(x1^3 - x1) * (x2^3 - x2)"
[solve]
W = [4]
[output]
dir = "{}"
"#,
            dir.path().display()
        ),
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("lshape-b5.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    // Same problem as the built-in L-shape case: error columns populated
    // and small at W = 4.
    let err_u: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(err_u < 1e-3, "err_u = {err_u}");
}

#[test]
fn cases_subcommand_lists_all() {
    let out = bin().arg("cases").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["ex1", "ex4", "ex8"] {
        assert!(text.contains(name));
    }
}
