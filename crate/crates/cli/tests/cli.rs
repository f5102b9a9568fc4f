use std::path::Path;
use std::process::{Command, Output};

use convex_multifractal::constructions::validate_sequence;
use serde_json::Value;

fn cvxmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvxmf"))
        .args(args)
        .env("CVXMF_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn auto_sequence_is_the_smallest_admissible_pair() {
    let o = cvxmf(&[
        "construct",
        "--base",
        "quad",
        "--seq",
        "auto",
        "--depth",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ls: Vec<u64> = v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["l"].as_u64().unwrap())
        .collect();
    let first = (2..=64u64)
        .flat_map(|a| (a + 1..=64).map(move |b| [a, b]))
        .find(|p| validate_sequence(p).is_ok())
        .unwrap();
    assert_eq!(ls, first);
    assert!(v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .all(|t| t["kind"] == "fbar"));
}

#[test]
fn zero_function() {
    let o = cvxmf(&["construct", "--depth", "0", "--base", "zero"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["terms"], serde_json::json!([]));
}

#[test]
fn inadmissible_sequence_names_the_condition() {
    let o = cvxmf(&["construct", "--seq", "3,4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("l_k > 2^k violated at k=2"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_and_unresolvable_inputs_exit_2() {
    let o = cvxmf(&["spectrum", "--function", "/nonexistent/f.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/f.json"));

    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "f.json");
    assert!(cvxmf(&["construct", "--depth", "0", "--out", &f])
        .status
        .success());
    let o = cvxmf(&["spectrum", "--function", &f, "--grid", "8"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn smooth_spectrum_passes_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "q.json");
    assert!(
        cvxmf(&["construct", "--depth", "0", "--dim", "2", "--out", &f])
            .status
            .success()
    );
    let o = cvxmf(&[
        "spectrum",
        "--function",
        &f,
        "--grid",
        "10",
        "--min-scale",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("h,value,kind,bin_width,scale_min,scale_max\n"));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("-inf")));
    assert!(stderr(&o).contains("upper bound: pass"));
}

#[test]
fn theoretical_curves() {
    let o = cvxmf(&[
        "spectrum",
        "--theoretical",
        "convex-typical",
        "--dim",
        "2",
        "--bin-width",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        v["curve"]["values"],
        serde_json::json!([1.0, "-inf", 1.0, 1.5, 2.0, "-inf", "-inf"])
    );
}

#[test]
fn cantor_counts() {
    let o = cvxmf(&[
        "cantor", "--h", "1", "--depth", "1", "--seq", "3", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).lines().nth(1),
        Some(format!("1,512,-13,{}", 9.0 / 13.0).as_str())
    );

    let o = cvxmf(&["cantor", "--h", "1.5"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let slopes: Vec<f64> = v["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["slope"].as_f64().unwrap())
        .collect();
    assert!(slopes[0] < slopes[1] && slopes[1] < 0.5);

    let o = cvxmf(&["cantor", "--h", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("h must lie in [1,2)"));
}

#[test]
fn verify_suite_and_controls() {
    let o = cvxmf(&["verify", "--negative-controls"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["ok"] == true));
    assert!(rows
        .iter()
        .filter(|r| r["control"] == true)
        .all(|r| r["held"] == false));

    let o = cvxmf(&["verify", "--only", "exponent-shift", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn outputs_are_deterministic_and_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    for out in [&a, &b] {
        assert!(
            cvxmf(&["cantor", "--h", "1.75", "--seed", "3", "--out", out])
                .status
                .success()
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // Nothing but the two outputs is left behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.json");
    std::fs::write(&cfg, r#"{"base": "zero", "seq": [3, 6], "dim": 2}"#).unwrap();
    let o = cvxmf(&["--config", &cfg, "construct"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"], 2);
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);
    let o = cvxmf(&["--config", &cfg, "construct", "--dim", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"], 1);

    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(
        cvxmf(&["--config", &cfg, "construct"]).status.code(),
        Some(1)
    );
}

#[test]
fn construct_samples_as_csv() {
    let o = cvxmf(&[
        "construct",
        "--seq",
        "3",
        "--depth",
        "1",
        "--format",
        "csv",
        "--grid",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,value");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0,0");
}
