use paspeed::forward::BoundaryTrace;
use paspeed::recon::ReconstructionReport;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn paspeed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paspeed")).args(args).env("PASPEED_THREADS", "4").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One two-inclusion trace shared by the tests of this binary.
fn simulated() -> &'static (tempfile::TempDir, PathBuf) {
    static CELL: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("trace.bin");
        let out = paspeed(&["simulate", "--config", s(&config("two_inclusion.toml")), "--out", s(&trace)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (dir, trace)
    })
}

#[test]
fn simulate_is_deterministic_and_writes_a_manifest() {
    let (dir, first) = simulated();
    let again = dir.path().join("again.bin");
    let out = paspeed(&["simulate", "--config", s(&config("two_inclusion.toml")), "--out", s(&again)]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(&again).unwrap());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["grid"]["n"], 128);
    assert_eq!(manifest["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reconstruct_writes_report_csv_and_source() {
    let (dir, trace) = simulated();
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let report = dir.path().join(name);
        let cfg = config("two_inclusion.toml");
        let out = paspeed(&["reconstruct", s(trace), "--config", s(&cfg), "--out", s(&report)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let r = ReconstructionReport::from_json(std::str::from_utf8(&reports[0]).unwrap()).unwrap();
    assert_eq!(r.localization.as_ref().unwrap().rank, 2);
    assert!(r.matching.as_ref().unwrap().is_complete());
    let csv = std::fs::read_to_string(dir.path().join("a.json.csv")).unwrap();
    assert!(csv.starts_with(ReconstructionReport::CSV_HEADER));
    let fhat = std::fs::read_to_string(dir.path().join("a.json.fhat.csv")).unwrap();
    assert!(fhat.starts_with("x,y,z,f_hat\n") && fhat.lines().count() > 1000);
    assert!(dir.path().join("a.json.manifest.json").exists());

    let exported = dir.path().join("export.csv");
    assert_eq!(code(&paspeed(&["export-csv", s(&dir.path().join("a.json")), "--out", s(&exported)])), 0);
    assert_eq!(std::fs::read_to_string(&exported).unwrap(), csv);
}

#[test]
fn export_csv_of_a_trace() {
    let (dir, trace) = simulated();
    let out = dir.path().join("trace.csv");
    assert_eq!(code(&paspeed(&["export-csv", s(trace), "--out", s(&out)])), 0);
    let t = BoundaryTrace::load(trace).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() > t.times());
}

#[test]
fn truncated_trace_is_a_format_error() {
    let (_, trace) = simulated();
    let dir = tempfile::tempdir().unwrap();
    let cut = dir.path().join("cut.bin");
    std::fs::write(&cut, &std::fs::read(trace).unwrap()[..1000]).unwrap();
    let out = paspeed(&["reconstruct", s(&cut), "--config", s(&config("two_inclusion.toml")), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte offset"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("homogeneous.toml")).unwrap() + "\nunknown_key = 1\n";
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&paspeed(&["oracle-check", "--config", s(&bad)])), 2);
    assert_eq!(code(&paspeed(&["simulate", "--out", s(&dir.path().join("t.bin"))])), 2);
}

#[test]
fn inadmissible_contrast_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("contrast_too_high.toml");
    assert_eq!(code(&paspeed(&["oracle-check", "--config", s(&cfg)])), 3);
    let out = dir.path().join("t.bin");
    assert_eq!(code(&paspeed(&["simulate", "--config", s(&cfg), "--out", s(&out)])), 3);
    assert!(!out.exists());
}

#[test]
fn oracle_check_passes_and_catches_a_flipped_u2() {
    let cfg = config("homogeneous.toml");
    let ok = paspeed(&["oracle-check", "--config", s(&cfg)]);
    assert_eq!(code(&ok), 0, "{}{}", String::from_utf8_lossy(&ok.stdout), String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).lines().all(|l| l.starts_with("PASS")));
    let flipped = paspeed(&["oracle-check", "--config", s(&cfg), "--flip-u2"]);
    assert_eq!(code(&flipped), 1);
    assert!(String::from_utf8_lossy(&flipped.stderr).contains("FAIL  u2_constancy"));
}

#[test]
fn truncated_window_is_a_stage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("homogeneous.toml");
    let trace = dir.path().join("t.bin");
    assert_eq!(code(&paspeed(&["simulate", "--config", s(&cfg), "--grid-n", "64", "--out", s(&trace)])), 0);
    let out = paspeed(&["reconstruct", s(&trace), "--config", s(&cfg), "--grid-n", "64", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `"));
}
