use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nrv2x(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrv2x")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_prints_the_normalized_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"seed": 9, "density": {"lambda": 10, "theta": 0}}"#);
    let o = nrv2x(&["validate", "--scenario", &f]);
    assert!(o.status.success(), "{}", stderr(&o));
    let back = nrv2x::parse_scenario(&stdout(&o)).unwrap();
    assert_eq!((back.seed, back.density.lambda), (9, 10));
}

#[test]
fn invalid_scenarios_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"rsus": [{"position": {"x": 600, "y": 0}, "range_m": 150, "channel_index": 0}]}"#);
    let o = nrv2x(&["validate", "--scenario", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("outside space"), "{}", stderr(&o));

    let f = write(dir.path(), "syntax.json", "{\"seed\": }");
    assert_eq!(nrv2x(&["simulate", "--scenario", &f]).status.code(), Some(1));
    assert_eq!(nrv2x(&["validate", "--scenario", "/nonexistent/s.json"]).status.code(), Some(1));
    assert_eq!(nrv2x(&["simulate", "--rsus", "4", "--duration-ms", "100"]).status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(nrv2x(&["simulate", "--seeds", "x"]).status.code(), Some(1));
    assert_eq!(nrv2x(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nrv2x(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_writes_cell_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nrv2x(&["simulate", "--rsus", "2", "--lambda", "5", "--seeds", "1..=2", "--duration-ms", "2000", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("seed 1:") && text.contains("seed 2:") && text.contains("rsus=2 lambda=5"), "{text}");
    let cell = dir.path().join("rsu2_lambda5");
    for f in ["samples.csv", "histogram.csv", "summary.json", "pdf.svg"] {
        assert!(cell.join(f).exists(), "{f} missing");
    }
}

#[test]
fn partial_matrix_fails_the_trend_assertion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["matrix", "--rsus", "1", "--lambda", "5", "--seeds", "0", "--duration-ms", "1500", "--out", out];
    let o = nrv2x(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("complete=false"));
    assert!(dir.path().join("trend.json").exists());

    let mut strict = args.to_vec();
    strict.push("--assert-trends");
    let o = nrv2x(&strict);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
