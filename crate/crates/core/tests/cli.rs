//! The command-line front end, run as a subprocess.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_synthaudit"))
}

fn minimal() -> Value {
    json!({
        "mechanism": {"family": "privbayes", "epsilon": 1.0},
        "attack": "Dcr",
        "pair": {"worst_case": {"schema": {"attributes": [
            {"name": "x", "categories": ["a", "b"]},
            {"name": "y", "categories": ["u", "v", "w"]}
        ]}, "small": true}},
        "n_models": 10,
        "synth_size": 5,
        "delta": 0.0,
        "method": "EpsDeltaRegion",
        "master_seed": 1
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn audit(cfg: &Path, out: &Path, workers: &str) -> Output {
    bin().arg("audit").arg(cfg).arg("--out").arg(out).args(["--workers", workers]).output().unwrap()
}

#[test]
fn minimal_audit_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", &minimal());
    let out = dir.path().join("out");
    let o = audit(&cfg, &out, "2");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "scores.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let scores = fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().next(), Some("b,score,split,run_seed"));
    assert_eq!(scores.lines().count(), 11);
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["n_models"] = json!(80);
    let cfg = write(dir.path(), "a.json", &v);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(audit(&cfg, &a, "1").status.code(), Some(0));
    assert_eq!(audit(&cfg, &b, "8").status.code(), Some(0));
    for f in ["report.json", "scores.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_mechanism_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["mechanism"]["family"] = json!("foo");
    let cfg = write(dir.path(), "a.json", &v);
    let o = audit(&cfg, &dir.path().join("out"), "1");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mechanism.family"), "{err}");
}

#[test]
fn unknown_attack_and_bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["attack"] = json!("Psychic");
    let o = audit(&write(dir.path(), "a.json", &v), &dir.path().join("o1"), "1");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("attack"));

    let mut v = minimal();
    v["mechanism"]["epsilon"] = json!(-1.0);
    let o = audit(&write(dir.path(), "b.json", &v), &dir.path().join("o2"), "1");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mechanism.epsilon"));

    // Logan needs a GAN.
    let mut v = minimal();
    v["attack"] = json!("Logan");
    let o = audit(&write(dir.path(), "c.json", &v), &dir.path().join("o3"), "1");
    assert_eq!(o.status.code(), Some(2));

    let o = audit(&dir.path().join("missing.json"), &dir.path().join("o4"), "1");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["pair"] = json!({"dataset": {"data": {"schema": "schema.json", "csv": "absent.csv"}, "target": {"row": 0}}});
    fs::write(
        dir.path().join("schema.json"),
        json!({"attributes": [{"name": "x", "categories": ["a", "b"]}]}).to_string(),
    )
    .unwrap();
    let o = audit(&write(dir.path(), "a.json", &v), &dir.path().join("out"), "1");
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_writes_one_manifest_per_eps_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &json!({"eps": [1.0, 2.0, 4.0], "audit": minimal()}));
    let out = dir.path().join("sweep");
    let o = bin().arg("sweep").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "eps,eps_emp,stddev,verdict");
    assert_eq!(lines.len(), 4);
    for e in ["1", "2", "4"] {
        assert!(out.join(format!("eps_{e}")).join("manifest.json").exists());
    }
}

#[test]
fn empty_sweep_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", &json!({"eps": [], "audit": minimal()}));
    let o = bin().arg("sweep").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
