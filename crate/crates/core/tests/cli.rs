mod common;

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chart2mermaid"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("CHART2MERMAID_API_KEY")
        .output()
        .unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn noise_report_writes_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::build_dataset(tmp.path(), 1);
    let out = tmp.path().join("out");
    let o = run(&["noise-report", "--manifest", &s(&ds.manifest), "--out", &s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["noise.json", "noise.csv", "noise.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("noise.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn sweep_with_mock_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::build_dataset(tmp.path(), 1);
    let out = tmp.path().join("out");
    let o = run(&[
        "sweep", "--manifest", &s(&ds.manifest), "--mock", &s(&ds.fixtures), "--runs", "1", "--out", &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sweep.json").is_file());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("C1"), "{stdout}");
}

#[test]
fn canny_override_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::build_dataset(tmp.path(), 1);
    let o = run(&["convert", "--manifest", &s(&ds.manifest), "--canny", "200,100,3", "--mock", &s(&ds.fixtures)]);
    assert!(!o.status.success());
    let o = run(&["convert", "--manifest", &s(&ds.manifest), "--canny", "100,200,4", "--mock", &s(&ds.fixtures)]);
    assert!(!o.status.success());
}

#[test]
fn live_mode_needs_an_endpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = common::build_dataset(tmp.path(), 1);
    let out = tmp.path().join("out");
    let o = run(&["convert", "--manifest", &s(&ds.manifest), "--out", &s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn compare_reports_missing_results() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--out", &s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
}
