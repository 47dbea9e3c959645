use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;
use zeroledger_cli::format::reserialize;

fn zl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeroledger"))
        .args(args)
        .env_remove("ZL_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("JSON output")
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn eval_g_at_one() {
    let o = zl(&["eval", "g", "1"]);
    assert_eq!(code(&o), 0);
    let v = as_f64(&json(&o)["value"]);
    assert!((v - 11.0 / 30.0).abs() < 1e-10);
}

#[test]
fn eval_b_at_the_stated_triple() {
    let o = zl(&["eval", "B", "0.047065", "0.128170", "0.084299", "3.08"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert!(as_f64(&doc["value"]) <= 49.7);
    assert!(as_f64(&doc["slacks"][0]["margin"]) >= 0.0);
}

#[test]
fn eval_arity_and_domain_errors_exit_2() {
    assert_eq!(code(&zl(&["eval", "B0", "0.5"])), 2);
    assert_eq!(code(&zl(&["eval", "g", "3"])), 2);
    assert_eq!(code(&zl(&["eval", "Rres", "1.311", "0.5", "0.92", "0.92", "7"])), 2);
    assert_eq!(code(&zl(&["eval", "nonsense", "1"])), 2);
}

#[test]
fn eval_accepts_negative_arguments() {
    let o = zl(&["eval", "G", "-10"]);
    assert_eq!(code(&o), 0);
    assert!(as_f64(&json(&o)["value"]) > 1.0);
}

#[test]
fn verify_tables_default_passes_with_31_rows() {
    let o = zl(&["verify-tables"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    let rows = doc["tables"].as_array().unwrap();
    assert_eq!(rows.len(), 31);
    for r in rows {
        for key in ["id", "paper", "computed", "margin", "feasible"] {
            assert!(r.get(key).is_some(), "row lacks {key}");
        }
        assert_eq!(r["feasible"], Value::Bool(true));
    }
}

#[test]
fn json_round_trips_byte_identically() {
    for args in [
        &["verify-cases"][..],
        &["eval", "Rgen", "1.273", "1.08", "1.08", "1.08"],
    ] {
        let text = stdout(&zl(args));
        assert_eq!(reserialize(&text).unwrap(), text);
    }
}

#[test]
fn margins_are_scientific_and_reals_have_ten_digits() {
    let text = stdout(&zl(&["verify-tables"]));
    assert!(text.contains("\"paper\": 0.6750000000"));
    let margin_lines: Vec<&str> = text
        .lines()
        .filter(|l| l.trim_start().starts_with("\"margin\": "))
        .collect();
    assert_eq!(margin_lines.len(), 31);
    assert!(margin_lines.iter().all(|l| l.contains('e')));
}

#[test]
fn verify_tables_at_smaller_delta_marks_rows() {
    let o = zl(&["verify-tables", "--delta", "0.2"]);
    let doc = json(&o);
    let rows = doc["tables"].as_array().unwrap();
    assert_eq!(rows.len(), 31);
    let infeasible = rows
        .iter()
        .any(|r| r["computed"].is_null() || r["feasible"] == Value::Bool(false));
    let all_pass = rows.iter().all(|r| r["pass"] == Value::Bool(true));
    let expected = if infeasible {
        2
    } else if all_pass {
        0
    } else {
        1
    };
    assert_eq!(code(&o), expected);
}

#[test]
fn verify_cases_schema_and_exit() {
    let o = zl(&["verify-cases"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    for key in ["delta", "c0", "tables", "cases", "c1", "overall_pass"] {
        assert!(keys.contains(&key), "missing {key}");
    }
    let cases = doc["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 10);
    for c in cases {
        for key in ["case", "subcase", "bound", "paper", "pass", "components", "discrepancy"] {
            assert!(c.get(key).is_some(), "certificate lacks {key}");
        }
    }
    assert!(as_f64(&doc["c1"]) >= 0.005 - 5e-4);
}

#[test]
fn verify_cases_fails_above_the_frontier() {
    assert_eq!(code(&zl(&["verify-cases", "--delta", "0.3"])), 1);
}

#[test]
fn csv_and_markdown_renderings() {
    let csv = stdout(&zl(&["verify-cases", "--format", "csv"]));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("section,id,subcase,paper,computed,margin,feasible,pass,note")
    );
    assert_eq!(csv.lines().filter(|l| l.starts_with("table,")).count(), 31);
    assert_eq!(csv.lines().filter(|l| l.starts_with("case,")).count(), 10);
    let md = stdout(&zl(&["verify-cases", "--format", "markdown"]));
    assert!(md.starts_with("# Verification at delta = 0.2910000000"));
    assert!(md.contains("Overall pass: yes"));
}

#[test]
fn search_single_probe_is_degenerate() {
    let o = zl(&["search-delta", "0.291", "0.292", "1e-3"]);
    assert_eq!(code(&o), 3);
    let doc = json(&o);
    assert_eq!(doc["outcome"], "single_probe");
    assert_eq!(doc["trace"].as_array().unwrap().len(), 1);
}

#[test]
fn search_rejects_reversed_interval() {
    assert_eq!(code(&zl(&["search-delta", "0.3", "0.2"])), 2);
}

#[test]
fn config_file_then_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# exploratory run\ndelta = 0.28\nformat = csv  # overridden below\n").unwrap();
    let path = f.path().to_str().unwrap();

    let o = zl(&["eval", "T31", "3.08", "--config", path, "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["delta"].to_string(), "0.2800000000");

    let o = zl(&[
        "eval", "T31", "3.08", "--config", path, "--delta", "0.291", "--format", "json",
    ]);
    assert_eq!(json(&o)["delta"].to_string(), "0.2910000000");

    let o = zl(&["eval", "T31", "3.08", "--config", path]);
    assert!(stdout(&o).starts_with("name,value\n"));
}

#[test]
fn bad_config_exits_2() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "delta = 0.28\nwobble = 3").unwrap();
    assert_eq!(code(&zl(&["verify-tables", "--config", f.path().to_str().unwrap()])), 2);
    assert_eq!(code(&zl(&["verify-tables", "--config", "/nonexistent/zl.cfg"])), 2);
}

#[test]
fn out_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = zl(&["eval", "xi", "1", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(reserialize(&text).unwrap(), text);
}

#[test]
fn parallel_runs_match_serial() {
    let serial = stdout(&zl(&["verify-cases"]));
    let parallel = Command::new(env!("CARGO_BIN_EXE_zeroledger"))
        .args(["verify-cases", "--parallel"])
        .env("ZL_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&parallel), 0);
    assert_eq!(stdout(&parallel), serial);
}

#[test]
fn invalid_thread_cap_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_zeroledger"))
        .args(["eval", "g", "1", "--parallel"])
        .env("ZL_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
