//! End-to-end tests driving the compiled `sgof` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn sgof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgof"))
        .args(args)
        .output()
        .expect("failed to launch sgof")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "sgof failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is not JSON")
}

/// 31 equispaced points i/32: every overlapping 1-spacing equals 1/32, so
/// pair statistics collapse to exactly zero.
fn write_grid(dir: &Path) -> String {
    let path = dir.join("grid.txt");
    let mut text = String::from("# equispaced test data\n");
    for i in 1..32 {
        text.push_str(&format!("{}\n", i as f64 / 32.0));
    }
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Observations packed into [0.48, 0.52]: one giant spacing dominates and any
/// scale-sensitive statistic explodes.
fn write_clump(dir: &Path) -> String {
    let path = dir.join("clump.txt");
    let mut text = String::new();
    for i in 0..25 {
        text.push_str(&format!("{}\n", 0.48 + i as f64 * 0.0016));
    }
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

// ---------------------------------------------------------------------------

#[test]
fn grid_data_scores_zero_and_upper_tail_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path());
    let out = sgof(&[
        "test", &grid, "--m", "2", "--tail", "upper", "--reps", "2000", "--seed", "7",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["statistic"], 0.0);
    assert_eq!(v["p_value"], 1.0);
    assert_eq!(v["reject"], false);
    // Effective config and seed are echoed for reproducibility.
    assert_eq!(v["effective_config"]["m"], 2);
    assert_eq!(v["metadata"]["seed"]["master_seed"], 7);
}

#[test]
fn exit_code_two_signals_rejection_only_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let clump = write_clump(dir.path());
    let base = ["test", clump.as_str(), "--reps", "2000", "--seed", "1"];

    let quiet = sgof(&base);
    assert_eq!(quiet.status.code(), Some(0), "rejection alone must not fail");
    let v: Value = serde_json::from_slice(&quiet.stdout).unwrap();
    assert_eq!(v["reject"], true, "clumped data must reject");

    let mut loud = base.to_vec();
    loud.push("--exit-on-reject");
    assert_eq!(sgof(&loud).status.code(), Some(2));
}

#[test]
fn test_output_round_trips_through_the_library_types() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path());
    let out = sgof(&["test", &grid, "--reps", "2000"]);
    let v = stdout_json(&out);
    // The flattened test result deserializes back into the library struct.
    let result: spacings_gof::TestResult = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(result.statistic, 0.0);
    assert_eq!(result.metadata.n, 32);
    assert_eq!(v["input"]["observations"], 31);
}

#[test]
fn repeated_runs_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path());
    let args = ["test", grid.as_str(), "--reps", "2000", "--seed", "42"];
    let a = sgof(&args);
    let b = sgof(&args);
    assert_eq!(a.stdout, b.stdout, "same command, same bytes");

    let t1 = sgof(&["--threads", "1", "test", &grid, "--reps", "2000", "--seed", "42"]);
    let t3 = sgof(&["--threads", "3", "test", &grid, "--reps", "2000", "--seed", "42"]);
    assert_eq!(t1.stdout, t3.stdout, "worker count must not leak into output");
    assert_eq!(a.stdout, t1.stdout);
}

#[test]
fn config_file_fills_gaps_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"m": 2, "alpha": 0.1, "tail": "upper"}"#).unwrap();
    let out = sgof(&[
        "--config",
        cfg.to_str().unwrap(),
        "test",
        &grid,
        "--alpha",
        "0.05",
        "--reps",
        "2000",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["effective_config"]["m"], 2, "config supplies m");
    assert_eq!(v["effective_config"]["alpha"], 0.05, "flag overrides config");
    assert_eq!(v["effective_config"]["tail"], "upper");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"repz": 500}"#).unwrap();
    let out = sgof(&["--config", cfg.to_str().unwrap(), "test", &grid]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("repz"), "stderr names the bad key: {err}");
}

#[test]
fn missing_input_file_is_a_usage_error() {
    let out = sgof(&["test", "/definitely/not/here.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not/here.txt"), "stderr names the path: {err}");
}

#[test]
fn critical_emits_sorted_deduped_quantiles() {
    let out = sgof(&[
        "critical", "--n", "40", "--alpha", "0.05,0.1", "--reps", "2000", "--seed", "5",
    ]);
    let v = stdout_json(&out);
    let probs: Vec<f64> = v["quantiles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| q["prob"].as_f64().unwrap())
        .collect();
    // 0.05 appears both as an alpha and as 0.1/2; it must show up once.
    assert_eq!(probs, vec![0.025, 0.05, 0.1, 0.9, 0.95, 0.975]);
    assert!(v.get("samples").is_none(), "samples omitted by default");

    let full = sgof(&[
        "critical", "--n", "40", "--reps", "2000", "--seed", "5", "--full-samples",
    ]);
    let vf = stdout_json(&full);
    assert_eq!(vf["samples"].as_array().unwrap().len(), 2000);
}

#[test]
fn moments_reports_the_closed_form_variance() {
    let out = sgof(&["moments", "--kernel", "gini:r=2", "--m", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["theta"], 2.0);
    assert_eq!(v["sigma2"], 16.0); // 8m(m+1)(2m+1)/3 at m = 1
}

#[test]
fn efficacy_matches_closed_form_and_self_comparison_is_unity() {
    let out = sgof(&[
        "efficacy", "--kernel", "gini:r=2", "--m", "4", "--L", "sine", "--compare", "gini:r=2",
    ]);
    let v = stdout_json(&out);
    // 3m(m+1)/(2(2m+1)) * 1/2 integral for the sine shape: 10/3 * 1/4 at m=4.
    let e2 = v["e2"].as_f64().unwrap();
    assert!((e2 - 10.0 / 12.0).abs() < 1e-12, "e2 = {e2}");
    let are = v["are_vs"]["gini:r=2"]["are"].as_f64().unwrap();
    assert!((are - 1.0).abs() < 1e-12);
}

#[test]
fn pit_option_transforms_through_the_null_family() {
    let dir = tempfile::tempdir().unwrap();
    // Exponential quartiles map to uniform quartiles: spacings all equal.
    let path = dir.path().join("expq.txt");
    let ln2 = std::f64::consts::LN_2;
    let data = format!("{}\n{}\n{}\n", 0.5 * (4.0f64 / 3.0).ln(), 0.5 * ln2, 0.5 * 2.0f64.ln() * 2.0);
    std::fs::write(&path, data).unwrap();
    let out = sgof(&[
        "test",
        path.to_str().unwrap(),
        "--null",
        "exp:2.0",
        "--tail",
        "upper",
        "--reps",
        "2000",
    ]);
    let v = stdout_json(&out);
    // The transform is exact up to rounding, so spacings are even to ~1 ulp.
    let stat = v["statistic"].as_f64().unwrap();
    assert!(stat.abs() < 1e-12, "statistic = {stat}");
    assert!(v["p_value"].as_f64().unwrap() > 0.99);
    assert_eq!(v["input"]["null"], "exp:2");
}

#[test]
fn power_writes_csv_and_json_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("arts");
    let out = sgof(&[
        "power",
        "--alternatives", "uniform",
        "--alternatives", "beta:1,3",
        "--m-values", "1,2",
        "--r-values", "2",
        "--n", "20",
        "--reps", "400",
        "--critical-reps", "2000",
        "--seed", "9",
        "--out", out_dir.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["written"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(out_dir.join("power.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "alternative,a,b,n,m,scheme,r,power,std_error,tail,critical_method,seed"
    );
    // 2 alternatives x 2 m x 2 schemes x 1 r.
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines.iter().any(|l| l.starts_with("beta,1,3,20,")));
    assert!(lines.iter().any(|l| l.starts_with("uniform,,,20,")));

    let study: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("power.json")).unwrap())
            .unwrap();
    assert_eq!(study["config"]["reps"], 400);
    assert_eq!(study["tables"].as_array().unwrap().len(), 2);
}

#[test]
fn tables_reproduction_writes_one_csv_per_alternative() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("arts");
    let out = sgof(&[
        "tables",
        "--reps", "100",
        "--critical-reps", "1000",
        "--seed", "2",
        "--out", out_dir.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["written"].as_array().unwrap().len(), 4);
    for k in 1..=3 {
        let csv = std::fs::read_to_string(out_dir.join(format!("table_{k}.csv"))).unwrap();
        // Header plus 5 m-values x 2 schemes x 3 r-values.
        assert_eq!(csv.lines().count(), 31);
    }
    let study: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("tables.json")).unwrap())
            .unwrap();
    assert_eq!(study["config"]["n"], 50);
    assert_eq!(study["config"]["tail"], "upper");
    assert_eq!(study["conventions"]["quantile_type"], "type7");
}

#[test]
fn help_succeeds_and_bad_flags_fail_with_one() {
    assert_eq!(sgof(&["--help"]).status.code(), Some(0));
    assert_eq!(sgof(&["test", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(sgof(&[]).status.code(), Some(1));
}
