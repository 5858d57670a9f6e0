use std::fs;

use burke_cli::{run_with, CSV_HEADER, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["burke"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).0, EXIT_PASS);
    assert_eq!(run(&[]).0, EXIT_USAGE);
    assert_eq!(run(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(run(&["discrete", "--p", "0.4"]).0, EXIT_USAGE);
    assert_eq!(run(&["discrete", "--p", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["discrete", "--samples", "many"]).0, EXIT_USAGE);
    assert_eq!(run(&["mm1", "--lambda", "3", "--xi", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["brownian", "--step", "0"]).0, EXIT_USAGE);
    assert_eq!(run(&["oracle", "--format", "xml"]).0, EXIT_USAGE);
    assert_eq!(run(&["decode"]).0, EXIT_USAGE);
    assert_eq!(run(&["all", "--samples", "10"]).0, EXIT_USAGE);
}

#[test]
fn empty_roundtrip_is_a_pass() {
    let (code, out, _) = run(&["roundtrip", "--samples", "0"]);
    assert_eq!(code, EXIT_PASS);
    let v = json(&out);
    assert_eq!(v["tests"], Value::Array(vec![]));
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v.get("certification").is_none());
    assert_eq!(v["config"]["suite"], "roundtrip");
}

#[test]
fn oracle_report_shape() {
    let (code, out, err) = run(&["oracle", "--window", "6", "--coords", "4"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let v = json(&out);
    assert_eq!(v["config"]["p"], "2/3");
    assert_eq!(v["config"]["window"], 6);
    assert!(v["config"].get("threads").is_none());
    let names: Vec<&str> = v["tests"].as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"oracle.measure_preservation"));
    assert!(err.contains("oracle:"), "timing goes to stderr");
}

#[test]
fn csv_output_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("s.csv");
    let (code, out, _) = run(&[
        "discrete", "--samples", "200", "--format", "csv", "--seed", "3",
        "--series", series.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS, "{out}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert!(lines.all(|l| l.split(',').count() == 5));
    let s = fs::read_to_string(series).unwrap();
    assert!(s.starts_with("series,x,empirical,theoretical\ndiscrete.q0,0,"));
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# small run\nsamples = 300\nseed = 9\nwindow = 5\nnu = 0.5\nstep = 0.05\n").unwrap();
    let (code, out, err) = run(&["brownian", "--config", cfg.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let v = json(&out);
    assert_eq!(v["config"]["samples"], 300);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["window"], 5.0);

    fs::write(&cfg, "samples = 3\nhorizon = 4\n").unwrap();
    assert_eq!(run(&["mm1", "--config", cfg.to_str().unwrap()]).0, EXIT_USAGE);
    assert_eq!(run(&["mm1", "--config", "/nonexistent/file"]).0, EXIT_USAGE);
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &str, t: &str| {
        vec!["mm1", "--samples", "400", "--window", "20", "--seed", "5", "--threads", t, "--out", p]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let mut full = vec!["burke".to_string()];
    full.extend(args(a.to_str().unwrap(), "1"));
    let c1 = run_with(full, &mut o, &mut e);
    let mut full = vec!["burke".to_string()];
    full.extend(args(b.to_str().unwrap(), "4"));
    let c2 = run_with(full, &mut o, &mut e);
    assert_eq!(c1, c2);
    assert!(o.is_empty(), "report goes to --out");
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn decode_writes_field_table() {
    // the table lists every (n, k) cell whether or not it was recovered
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("field.csv");
    let (code, out, err) = run(&[
        "decode", "--code", "0,0,0,0,0,0", "--k-origin", "-2", "--coords", "1",
        "--series", table.to_str().unwrap(),
    ]);
    assert!(code == EXIT_PASS || code == EXIT_FAIL, "{err}");
    let v = json(&out);
    assert_eq!(v["config"]["k_origin"], -2);
    let t = fs::read_to_string(table).unwrap();
    assert!(t.starts_with("n,k,spin,queue\n"));
    assert_eq!(t.lines().count(), 1 + 3 * 6);
}

#[test]
fn encode_suite_runs() {
    let (code, out, err) = run(&["encode", "--samples", "50", "--iterates", "8", "--coords", "2", "--seed", "1"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let v = json(&out);
    assert!(v["certification"].as_array().is_some_and(|c| !c.is_empty()));
}
