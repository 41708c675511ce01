use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn globalctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_globalctl")).args(args).output().expect("binary runs")
}

fn ok_record(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("run record is JSON")
}

fn err_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("error is JSON");
    v["error"].as_str().unwrap().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn syndrome_table_demo() {
    let dir = tempfile::tempdir().unwrap();
    let rec = ok_record(&globalctl(&["demo", "--name", "syndrome-table", "--out", p(dir.path())]));
    assert_eq!(rec["command"], "demo");
    let t: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("syndrome_table.json")).unwrap()).unwrap();
    let bits: Vec<u64> = t["rows"].as_array().unwrap().iter().map(|r| r["ancilla"].as_u64().unwrap()).collect();
    assert_eq!(bits, vec![0, 1, 1, 0, 0, 0, 1, 1]);
}

#[test]
fn other_demos_pass() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["two-qubit-gate", "buffer-reset", "correction-cycle"] {
        ok_record(&globalctl(&["demo", "--name", name, "--out", p(dir.path())]));
    }
}

#[test]
fn verify_sweep() {
    let rec = ok_record(&globalctl(&["verify", "--n", "10", "--programs", "50", "--seed", "1"]));
    assert!(rec["summary"]["max_deviation"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn compile_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let lay = dir.path().join("layout.json");
    let circ = dir.path().join("circuit.json");
    let prog = dir.path().join("prog.jsonl");
    let res = dir.path().join("result.json");
    fs::write(&lay, r#"{"n_comp": 3, "L": 3, "concat_depth": 0, "ss_width": 0, "margins": 0}"#).unwrap();
    fs::write(&circ, r#"[{"op": "prepare_cu"}, {"op": "single_qubit", "q": 0, "u": "x"}]"#).unwrap();
    let rec = ok_record(&globalctl(&["compile", "--circuit", p(&circ), "--layout", p(&lay), "--out", p(&prog)]));
    assert_eq!(rec["summary"]["initial_pattern"], "single-CU");
    ok_record(&globalctl(&["simulate", "--layout", p(&lay), "--program", p(&prog), "--out", p(&res)]));
    let r: Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    let bits: Vec<u64> = r["classical"].as_array().unwrap().iter().map(|b| b.as_u64().unwrap()).collect();
    let mut want = vec![0u64; 18];
    want[0] = 1;
    want[1] = 1;
    assert_eq!(bits, want);
}

#[test]
fn simulate_rejects_foreign_program() {
    let dir = tempfile::tempdir().unwrap();
    let lay2 = dir.path().join("l2.json");
    let lay3 = dir.path().join("l3.json");
    let circ = dir.path().join("c.json");
    let prog = dir.path().join("p.jsonl");
    fs::write(&lay2, r#"{"n_comp": 2, "L": 2, "concat_depth": 0, "ss_width": 0, "margins": 0}"#).unwrap();
    fs::write(&lay3, r#"{"n_comp": 3, "L": 3, "concat_depth": 0, "ss_width": 0, "margins": 0}"#).unwrap();
    fs::write(&circ, r#"[{"op": "single_qubit", "q": 0, "u": "h"}]"#).unwrap();
    ok_record(&globalctl(&["compile", "--circuit", p(&circ), "--layout", p(&lay2), "--out", p(&prog)]));
    let out = globalctl(&["simulate", "--layout", p(&lay3), "--program", p(&prog), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(err_kind(&out), "FingerprintMismatch");
}

#[test]
fn mc_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.json");
    let csv = dir.path().join("mc.csv");
    fs::write(
        &cfg,
        r#"{"model": {"p_flip": 0.01, "scope": {"cu_sites": true, "stations": false, "buffers": false, "payload": false}, "master_seed": 5}, "p_values": [0.0, 0.01]}"#,
    )
    .unwrap();
    ok_record(&globalctl(&["mc", "--config", p(&cfg), "--trials", "500", "--out", p(&csv)]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,mode,trials,failures,rate,wilson_lo,wilson_hi");
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("mc.json").exists());
}

#[test]
fn solve_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let rec = ok_record(&globalctl(&["solve", "--target", "axis:0,1,0:1.2", "--out", p(&out)]));
    assert!(rec["summary"]["residual"].as_f64().unwrap() <= 1e-6);
    assert!(out.exists());
}

#[test]
fn usage_and_file_errors_are_json() {
    assert_eq!(err_kind(&globalctl(&["verify", "--bogus"])), "Usage");
    assert_eq!(err_kind(&globalctl(&["mc", "--config", "/nonexistent.json", "--out", "/tmp/x.csv"])), "Io");
    assert_eq!(err_kind(&globalctl(&["solve", "--target", "nope"])), "InvalidArgument");
}

#[test]
fn deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok_record(&globalctl(&["demo", "--name", "correction-cycle", "--out", p(&a), "--seed", "3"]));
    ok_record(&globalctl(&["demo", "--name", "correction-cycle", "--out", p(&b), "--seed", "3"]));
    assert_eq!(
        fs::read(a.join("correction_cycle.json")).unwrap(),
        fs::read(b.join("correction_cycle.json")).unwrap()
    );
}
