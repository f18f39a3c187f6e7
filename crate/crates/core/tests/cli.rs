use std::path::Path;
use std::process::{Command, Output};

use byzsgd::harness;

fn byzsgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_byzsgd")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const GRID: &str = r#"{
  "base": {"task": {"kind": "logistic", "dim": 4, "samples": 64, "test_samples": 32},
           "m": 4, "batch_size": 4, "epochs": 2, "attack": {"kind": "alie"}, "delta": 0.25},
  "sweep": {"aggregator": ["cm", "cc"], "lr0": [0.05, 0.5], "seeds": [1, 2]}
}"#;

#[test]
fn grid_writes_csv_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "grid.json", GRID);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = byzsgd(&["grid", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = harness::read_csv(std::fs::File::open(&a).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.error.is_none() && r.final_accuracy.is_some()));
    let strip = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn run_emits_json_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"task": {"kind": "quadratic", "dim": 4}, "m": 4, "B": 2, "T": 30, "algorithm": "byzsgdnm",
            "schedule": {"kind": "constant", "lr": 0.05}}"#,
    );
    let o = byzsgd(&["run", &cfg, "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = harness::read_json(&o.stdout[..]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].rounds, 30);
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"task": {"kind": "quadratic", "dim": 4}, "m": 4, "B": 2, "delta": 0.6, "T": 3}"#);
    let o = byzsgd(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
}

#[test]
fn plan_reports_both_optima() {
    let o = byzsgd(&["plan", "--L", "1", "--sigma", "10", "--F0", "1", "--delta", "0.125", "--m", "8", "--C", "1e6", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["b_star_integer"], 203);
    assert_eq!(v["byzsgdnm_batch"], 6);
}

#[test]
fn analyze_fixture_prints_best_batches() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/table1.csv");
    let o = byzsgd(&["analyze", fixture.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("table1 byzsgdm cc alie: delta=0: B=32, delta=0.125: B=128, delta=0.375: B=512"), "{text}");
}
