use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_lattice-sternberg"))
        .arg("run")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

fn report(dir: &Path, stage: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("report_{stage}.json"))).unwrap()).unwrap()
}

#[test]
fn fixtures_run_clean() {
    for name in ["scalar_quadratic.json", "linear_nn.json"] {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(&fixture(name), dir.path(), &[]), 0, "{name}");
        for stage in ["decay", "norms", "spectrum", "nf", "conj"] {
            assert_eq!(report(dir.path(), stage)["status"], "ok", "{name} {stage}");
        }
    }
}

#[test]
fn coupled_conjugacy_stage() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&fixture("coupled_quadratic.json"), dir.path(), &["--stage", "conj"]), 0);
    let rep = report(dir.path(), "conj");
    for check in rep["checks"].as_array().unwrap() {
        assert_eq!(check["passed"], true, "{check}");
    }
    assert!(dir.path().join("conj_samples.csv").exists());
    assert!(!dir.path().join("report_decay.json").exists());
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = fixture("coupled_quadratic.json");
    assert_eq!(run(&cfg, a.path(), &[]), 0);
    assert_eq!(run(&cfg, b.path(), &[]), 0);
    for stage in ["decay", "norms", "spectrum", "nf", "conj"] {
        let file = format!("report_{stage}.json");
        assert_eq!(std::fs::read(a.path().join(&file)).unwrap(), std::fs::read(b.path().join(&file)).unwrap(), "{file}");
    }
    assert_eq!(std::fs::read(a.path().join("conj_samples.csv")).unwrap(), std::fs::read(b.path().join("conj_samples.csv")).unwrap());
}

#[test]
fn seed_override_changes_samples() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = fixture("scalar_quadratic.json");
    assert_eq!(run(&cfg, a.path(), &["--stage", "conj"]), 0);
    assert_eq!(run(&cfg, b.path(), &["--stage", "conj", "--seed-override", "99"]), 0);
    assert_ne!(std::fs::read(a.path().join("conj_samples.csv")).unwrap(), std::fs::read(b.path().join("conj_samples.csv")).unwrap());
}

#[test]
fn window_scale_multiplies_radius() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&fixture("linear_nn.json"), dir.path(), &["--stage", "norms", "--window-scale", "2"]), 0);
    assert_eq!(report(dir.path(), "norms")["result"]["window"]["radius"], 8);
}

#[test]
fn resonance_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&fixture("resonant_diag.json"), dir.path(), &[]), 3);
    let rep = report(dir.path(), "conj");
    assert_eq!(rep["status"], "error");
    assert_eq!(rep["error"]["kind"], "ResonantOrder");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&dir.path().join("missing.json"), dir.path(), &[]), 2);

    let text = std::fs::read_to_string(fixture("linear_nn.json")).unwrap();
    let mut cfg: Value = serde_json::from_str(&text).unwrap();
    cfg["decay"].as_object_mut().unwrap().remove("alpha");
    let path = dir.path().join("no_alpha.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(run(&path, dir.path(), &[]), 2);
    assert_eq!(report(dir.path(), "config")["status"], "error");

    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(run(&path, dir.path(), &[]), 2);
}
