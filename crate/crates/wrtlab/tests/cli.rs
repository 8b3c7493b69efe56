//! End-to-end tests of the wrtlab binary: exit codes, record determinism,
//! and the schema version gate.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn wrtlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wrtlab"))
}

/// Strip the timestamp field, which is excluded from the determinism contract.
fn canonical_records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| {
            let mut v: Value = serde_json::from_str(line).unwrap();
            v.as_object_mut().unwrap().remove("timestamp");
            v
        })
        .collect()
}

#[test]
fn usage_errors_exit_2() {
    let out = wrtlab()
        .args(["simulate", "--law", "not-a-law", "--n", "10", "--out", "/tmp/x.jsonl"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("w.jsonl");
    let out = wrtlab()
        .args(["simulate", "--law", "rrt", "--n", "10", "--window", "5:-5"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_replicate_single_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.jsonl");
    let out = wrtlab()
        .args(["simulate", "--law", "rrt", "--n", "1", "--seed", "3"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = canonical_records(&path);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["census"]["max_degree"], 0);
    assert_eq!(records[0]["schema_version"], 1);
}

#[test]
fn simulate_is_deterministic_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for path in [&a, &b] {
        let out = wrtlab()
            .args(["simulate", "--law", "atom-half", "--n", "500", "--seed", "17", "--replicates", "8"])
            .arg("--out")
            .arg(path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(canonical_records(&a), canonical_records(&b));
}

#[test]
fn simulate_resumes_by_replicate_index() {
    let dir = tempfile::tempdir().unwrap();
    let partial = dir.path().join("partial.jsonl");
    let full = dir.path().join("full.jsonl");
    let base = |path: &Path, reps: &str| {
        let out = wrtlab()
            .args(["simulate", "--law", "rrt", "--n", "200", "--seed", "9", "--replicates", reps])
            .arg("--out")
            .arg(path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    };
    base(&partial, "3");
    base(&partial, "10"); // second call appends replicates 3..10
    base(&full, "10");
    assert_eq!(canonical_records(&partial), canonical_records(&full));
}

#[test]
fn env_seed_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let out = wrtlab()
        .args(["simulate", "--law", "rrt", "--n", "100", "--replicates", "2"])
        .arg("--out")
        .arg(&a)
        .env("WRTLAB_SEED", "321")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = wrtlab()
        .args(["simulate", "--law", "rrt", "--n", "100", "--seed", "321", "--replicates", "2"])
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(canonical_records(&a), canonical_records(&b));
}

#[test]
fn verify_rejects_unknown_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let mut record = serde_json::json!({
        "schema_version": 99,
        "law": {"kind": "constant", "value": 1.0},
        "n": 10,
        "mode": "fixed-one",
        "seed": 0,
        "replicate_index": 0,
        "eps_n": 0.0,
        "census": {
            "floor_center": 3, "i_lo": -5, "i_hi": 5,
            "xi": [0,0,0,0,0,1,0,0,0,0,0], "x_geq": [1,1,1,1,1,1,0,0,0,0,0],
            "max_degree": 3, "num_maximizers": 1
        },
        "edge_count": null,
        "timestamp": 0
    });
    fs::write(&path, format!("{record}\n")).unwrap();
    let out = wrtlab().args(["verify", "--records"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("schema version"), "{stderr}");

    // same record with the supported version parses past the gate
    record["schema_version"] = serde_json::json!(1);
    fs::write(&path, format!("{record}\n")).unwrap();
    let out = wrtlab().args(["verify", "--records"]).arg(&path).output().unwrap();
    assert_ne!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_passes_on_simulated_atom_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let out = wrtlab()
        .args([
            "simulate", "--law", "atom-half", "--n", "20000", "--seed", "4242",
            "--replicates", "600", "--window", "-5:5",
        ])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report_path = dir.path().join("report.json");
    let out = wrtlab()
        .args(["verify", "--records"])
        .arg(&path)
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "verify failed:\n{stdout}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["all_pass"], Value::Bool(true));
    assert!(report["claims"].as_array().unwrap().len() >= 9);
    assert!(stdout.contains("pass"));
}

#[test]
fn predict_and_table_outputs() {
    let out = wrtlab()
        .args(["predict", "--law", "beta23", "--n", "1000000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["second_order_limit"], serde_json::json!(-3.0));
    assert_eq!(v["case"], "beta-weibull");

    let out = wrtlab()
        .args(["table", "--law", "rrt", "--k-max", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let header = text.lines().next().unwrap();
    assert_eq!(header, "k,pk_quadrature,pk_closed,pk_asymptotic,lower_bound,upper_bound");
    let row1: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    let pk: f64 = row1[1].parse().unwrap();
    assert!((pk - 0.25).abs() < 1e-12);
}

#[test]
fn oracle_json_dump() {
    let out = wrtlab()
        .args(["oracle", "--weights", "1,0.5,0.5", "--targets", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let table = v["table"].as_array().unwrap();
    assert_eq!(table.len(), 2);
    assert!((table[0]["probability"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((table[1]["probability"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}
