use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dia-isac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    std::fs::write(
        &path,
        r#"{"fleet": {"k": 4, "horizon": 20}, "run": {"trials": 2, "master_seed": 11}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_config_is_a_usage_error_naming_the_file() {
    let out = run(&["simulate", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cfg.json"));
}

#[test]
fn unknown_flag_and_scheme_are_usage_errors() {
    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = run(&["simulate", "--config", &cfg, "--scheme", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dia"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"fleet": {"kk": 3}}"#).unwrap();
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_is_reproducible_across_output_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (d1, d2) = (dir.path().join("d1"), dir.path().join("d2"));
    for d in [&d1, &d2] {
        let out = run(&["compare", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for n in names {
        assert_eq!(std::fs::read(d1.join(&n)).unwrap(), std::fs::read(d2.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn report_rebuilds_the_written_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    assert!(run(&["simulate", "--config", &cfg, "--out", out, "--scheme", "velocity-isac"]).status.success());
    let written = std::fs::read(out_dir.join("summary_velocity-isac.json")).unwrap();
    std::fs::remove_file(out_dir.join("summary_velocity-isac.json")).unwrap();
    let rep = run(&["report", "--out", out]);
    assert!(rep.status.success());
    assert!(String::from_utf8_lossy(&rep.stdout).contains("velocity-isac"));
    let simulated = run(&["simulate", "--config", &cfg, "--out", out, "--scheme", "velocity-isac"]);
    assert!(simulated.status.success());
    assert_eq!(std::fs::read(out_dir.join("summary_velocity-isac.json")).unwrap(), written);
}

#[test]
fn report_without_data_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    std::fs::write(&path, r#"{"fleet": {"horizon": 3}, "run": {"trials": 1}}"#).unwrap();
    let out = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--scheme",
        "location-isac",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,v_max_mps,scheme,trials,accuracy_mean,accuracy_std,mean_rate"
    );
    assert_eq!(lines.count(), 30);
}
