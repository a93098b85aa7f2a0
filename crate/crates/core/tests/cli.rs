use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const WORKED_Q: &str = "2:2,3:1,11:inf";

fn soe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soe")).args(args).output().expect("soe runs")
}

fn construct_worked(out: &Path) -> Output {
    soe(&["--out", out.to_str().unwrap(), "construct", "--q", WORKED_Q, "--stages", "2"])
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let built = construct_worked(&path);
    assert_eq!(built.status.code(), Some(0), "{}", String::from_utf8_lossy(&built.stderr));
    let checked = soe(&["verify", path.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(0), "{}", stdout(&checked));
}

#[test]
fn construct_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    construct_worked(&a);
    construct_worked(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn mutated_rung_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    construct_worked(&path);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["stages"][1]["s"][2] = Value::from(21);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let checked = soe(&["verify", path.to_str().unwrap()]);
    assert_eq!(checked.status.code(), Some(2));
    assert!(stdout(&checked).contains("(1,2,2) meets (1,1,9)"), "{}", stdout(&checked));
}

#[test]
fn format_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    construct_worked(&path);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["format"] = Value::from(99);
    std::fs::write(&path, doc.to_string()).unwrap();
    assert_eq!(soe(&["verify", path.to_str().unwrap()]).status.code(), Some(6));

    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(soe(&["verify", path.to_str().unwrap()]).status.code(), Some(6));
}

#[test]
fn zero_stages_is_a_valid_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let o = soe(&["--out", path.to_str().unwrap(), "construct", "--stages", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(soe(&["verify", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn depth_cap_exit_code() {
    let o = soe(&["--depth-cap", "100", "construct", "--q", WORKED_Q, "--stages", "2"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn usage_errors() {
    assert_eq!(soe(&["construct", "--q", "4:inf"]).status.code(), Some(1));
    assert_eq!(soe(&["verify", "/nonexistent/run.json"]).status.code(), Some(1));
}

#[test]
fn entropy_reports_both_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    construct_worked(&path);
    let o = soe(&["--format", "csv", "entropy", path.to_str().unwrap(), "--windows", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let tables: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    for table in ["P_ST", "P_TS", "odometer-window", "bernoulli"] {
        assert!(tables.iter().any(|t| t == table), "missing {table}");
    }
}

#[test]
fn remark_report_passes() {
    let o = soe(&["--format", "csv", "remark", "--depth", "12", "--report", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().count() > 1);
}

#[test]
fn growth_reference_count() {
    for (n, r, fixed, count) in [("2", "1", "", 5), ("2", "2", "", 9), ("3", "2", "2=5", 9)] {
        let o = soe(&["--format", "json", "growth", "--group", "z", "--n", n, "--r", r, "--omega0", fixed]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let report = if doc.is_array() { &doc[0] } else { &doc };
        assert_eq!(report["count"], Value::from(count));
        assert_eq!(report["pass"], Value::from(true));
    }
}
