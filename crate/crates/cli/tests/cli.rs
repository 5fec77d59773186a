use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn summa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_summa")).args(args).output().expect("summa runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CESARO: &str = r#"{
  "matrices": [{"label": "C", "kind": "cesaro"}],
  "horizon": {"n": 64},
  "tasks": [{"id": "reg", "task": "check-regular", "matrix": "C"}]
}"#;

const ROW_SUM_TWO: &str = r#"{
  "matrices": [{"label": "two", "kind": "corpus", "name": "row-sum-2"}],
  "horizon": {"n": 64},
  "tasks": [{"id": "two", "task": "check-regular", "matrix": "two"}]
}"#;

#[test]
fn cesaro_regularity_holds() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", CESARO);
    let out = summa(&["run", &path]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for c in ["M1", "M2", "M3", "M4"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(c) && l.contains("Holds")), "{text}");
    }
}

#[test]
fn unknown_sequence_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", r#"{"tasks": [{"task": "ideal-limit", "sequence": "missing"}]}"#);
    assert_eq!(summa(&["run", &path]).status.code(), Some(2));
    assert_eq!(summa(&["validate", &path]).status.code(), Some(2));
    let garbled = write(dir.path(), "garbled.json", "{ not json");
    assert_eq!(summa(&["validate", &garbled]).status.code(), Some(2));
}

#[test]
fn strict_mode_fails_on_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "two.json", ROW_SUM_TWO);
    assert_eq!(summa(&["run", &path]).status.code(), Some(0));
    let out = summa(&["run", &path, "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("M3   FailsWithWitness  witness: row"));
}

#[test]
fn witness_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "two.json", ROW_SUM_TWO);
    let out = summa(&["run", &path, "--replay-witness", "two/M3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["reproduced"], true);
    assert_eq!(v["verdict"], "FailsWithWitness");
    assert_eq!(v["replayed"], "2");
    assert_eq!(summa(&["run", &path, "--replay-witness", "two/M9"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"matrices": [{"label": "C", "kind": "cesaro"}],
        "tasks": [{"task": "check-regular", "matrix": "C", "idealJ": "density-zero"}]}"#;
    let path = write(dir.path(), "rt.json", text);
    assert_eq!(summa(&["run", &path]).status.code(), Some(3));
}

#[test]
fn empty_task_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.json", "{}");
    let out = summa(&["run", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["results"], Value::Array(vec![]));
}

#[test]
fn machine_report_is_deterministic_and_typed() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "matrices": [
        {"label": "C", "kind": "cesaro"}, {"label": "I", "kind": "identity"},
        {"label": "even", "kind": "corpus", "name": "even-mass"}, {"label": "odd", "kind": "corpus", "name": "odd-mass"}
      ],
      "sequences": [{"label": "alt", "kind": "periodic", "block": ["1", "0"]}],
      "horizon": {"n": 64},
      "tasks": [
        {"id": "eq", "task": "theorem-equivalence", "family": ["even", "odd"], "sequence": "alt"},
        {"id": "ls", "task": "uniform-limsup", "family": ["C", "I"], "sequence": "alt"},
        {"id": "sig", "task": "sigma-limit", "sequence": "alt"}
      ]
    }"#;
    let path = write(dir.path(), "m.json", text);
    let a = summa(&["run", &path, "--format", "json"]);
    let b = summa(&["run", &path, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    let items = v["results"][0]["outcome"]["items"].as_array().unwrap();
    assert_eq!(items.iter().map(|i| i["item"].as_str().unwrap()).collect::<Vec<_>>(), ["i", "ii", "iii"]);
    assert!(items[1]["witnessSelection"].as_str().unwrap().contains("^ω"));
    let ls = &v["results"][1]["outcome"];
    assert_eq!(ls["lhs"], "1");
    assert_eq!(ls["adversarialRhs"], "1");
    assert_eq!(v["results"][2]["outcome"]["eta"][0], "1/2");
}

#[test]
fn flags_override_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", CESARO);
    let out = summa(&["run", &path, "--horizon", "32", "--eps", "1/8", "--mode", "interval", "--seed", "7", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["mode"], "interval");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["results"][0]["horizon"]["n"], 32);
    assert_eq!(v["results"][0]["horizon"]["eps"], "1/8");
    assert_eq!(summa(&["run", &path, "--eps", "0"]).status.code(), Some(2));
}
