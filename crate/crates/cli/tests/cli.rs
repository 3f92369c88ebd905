use std::io::Write;
use std::process::{Command, Output, Stdio};

use sbmrd::{Graph, LabelVector};
use serde_json::Value;

const REF_SBM: &str = r#"{"model":"sbm","n":100,"p":[0.4,0.3,0.3],
    "W":[[0.5,0.2,0.1],[0.2,0.5,0.1],[0.1,0.1,0.4]]}"#;

fn sbmrd(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sbmrd"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn sbmrd");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn entropy_sbm_and_er() {
    let v = json(&sbmrd(&["entropy"], REF_SBM));
    let cond = v["conditional_bits"].as_f64().unwrap();
    assert!((cond - 3502.750905627857).abs() < 1e-9);
    assert_eq!(v["interval"][0].as_f64().unwrap(), cond);

    let v = json(&sbmrd(&["entropy"], r#"{"model":"er","n":2,"p":0.5}"#));
    assert_eq!(v["model"], "er");
    assert!((v["entropy_bits"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn curve_csv_shape() {
    let out = sbmrd(&["curve", "--points", "5"], REF_SBM);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("D,D_per_edge,rate_bits,mu"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("0,0,3502.75090563,"));
    assert!(rows[4].starts_with("1242.45,0.251,0,"));
}

#[test]
fn curve_config_grid_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("er.json");
    let out = dir.path().join("curve.csv");
    std::fs::write(&cfg, r#"{"model":"er","n":3,"p":0.25,"grid":[0,0.3,0.75]}"#).unwrap();
    let res = sbmrd(
        &[
            "curve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        "",
    );
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(res.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().starts_with("0.75,0.25,0,"));
}

#[test]
fn curve_rejects_negative_grid() {
    let out = sbmrd(&["curve"], r#"{"model":"er","n":3,"p":0.25,"grid":[-1,0]}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn waterfill_reports_level_and_kkt() {
    let v = json(&sbmrd(&["waterfill", "--D", "495"], REF_SBM));
    assert!((v["mu"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((v["D_per_edge"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(v["dstar"].as_array().unwrap().len(), 3);
    assert!(v["kkt_max_violation"].as_f64().unwrap() <= 1e-10);

    let v = json(&sbmrd(
        &["waterfill"],
        r#"{"model":"er","n":3,"p":0.25,"D":0.3}"#,
    ));
    assert!((v["lambda"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(v["d"].as_array().unwrap().len(), 3);
}

#[test]
fn flag_overrides_config() {
    let cfg = r#"{"model":"er","n":3,"p":0.25,"D":0.3}"#;
    let v = json(&sbmrd(&["waterfill", "--D", "0.15"], cfg));
    assert!((v["lambda"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn waterfill_errors() {
    let out = sbmrd(&["waterfill", "--D", "2000"], REF_SBM);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("1242.45"), "{}", stderr(&out));

    assert_eq!(sbmrd(&["waterfill"], REF_SBM).status.code(), Some(2));
    assert_eq!(
        sbmrd(&["waterfill", "--D", "-1"], REF_SBM).status.code(),
        Some(2)
    );
}

#[test]
fn bad_configs_exit_2() {
    for cfg in [
        "{oops",
        r#"{"model":"sbm","n":10,"p":[0.5,0.6],"W":[[0.1,0.2],[0.2,0.1]]}"#,
        r#"{"model":"sbm","n":10,"p":[0.5,0.5],"W":[[0.1,0.2],[0.3,0.1]]}"#,
        r#"{"model":"er","n":1,"p":0.5}"#,
        r#"{"model":"er","n":5,"p":1.5}"#,
        r#"{"model":"inhom_er","n":3,"edge_probs":[0.1,0.2]}"#,
    ] {
        let out = sbmrd(&["entropy"], cfg);
        assert_eq!(out.status.code(), Some(2), "config {cfg}");
    }
    let out = sbmrd(&["entropy", "--config", "/nonexistent/cfg.json"], "");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_small_instances() {
    let v = json(&sbmrd(
        &["verify"],
        r#"{"model":"inhom_er","n":3,"edge_probs":[0.1,0.2,0.3]}"#,
    ));
    assert_eq!(v["all_within"], true);
    assert_eq!(v["results"].as_array().unwrap().len(), 5);

    let v = json(&sbmrd(
        &["verify"],
        r#"{"model":"sbm","n":3,"p":[0.5,0.5],"W":[[0.3,0.1],[0.1,0.4]],"D_list":[0.1,0.5]}"#,
    ));
    assert_eq!(v["all_within"], true);
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-6);
}

#[test]
fn verify_exit_codes() {
    // Too large for the oracle.
    assert_eq!(sbmrd(&["verify"], REF_SBM).status.code(), Some(2));
    assert_eq!(
        sbmrd(&["verify"], r#"{"model":"er","n":5,"p":0.2}"#)
            .status
            .code(),
        Some(2)
    );
    // Unattainable tolerance.
    let er = r#"{"model":"er","n":3,"p":0.2}"#;
    assert_eq!(sbmrd(&["verify", "--tol", "0"], er).status.code(), Some(1));
    // A tolerance below what the oracle reaches reports failure, not a crash.
    let out = sbmrd(&["verify", "--tol", "1e-300", "--D", "0.2"], er);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_within"], false);
}

#[test]
fn simulate_report_and_determinism() {
    let args = ["simulate", "--D", "495", "--trials", "50", "--seed", "9"];
    let a = sbmrd(&args, REF_SBM);
    let b = sbmrd(&args, REF_SBM);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["trials"], 50);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["pair_stats"].as_array().unwrap().len(), 6);

    let other = sbmrd(
        &["simulate", "--D", "495", "--trials", "50", "--seed", "10"],
        REF_SBM,
    );
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn simulate_errors() {
    assert_eq!(
        sbmrd(&["simulate", "--D", "495", "--trials", "0"], REF_SBM)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sbmrd(&["simulate"], REF_SBM).status.code(), Some(2));
    assert_eq!(
        sbmrd(
            &["simulate", "--D", "0.1"],
            r#"{"model":"er","n":5,"p":0.2}"#
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        sbmrd(&["simulate", "--D", "5000", "--trials", "2"], REF_SBM)
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trial0");
    let out = sbmrd(
        &[
            "simulate",
            "--D",
            "200",
            "--trials",
            "1",
            "--dump-dir",
            dump.to_str().unwrap(),
        ],
        REF_SBM,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["stderr"].is_null());

    let read = |name: &str| std::fs::read_to_string(dump.join(name)).unwrap();
    let labels = LabelVector::from_text(&read("labels.txt"), 3).unwrap();
    let graph = Graph::from_text(&read("graph.txt")).unwrap();
    let recon = Graph::from_text(&read("reconstruction.txt")).unwrap();
    assert_eq!(labels.len(), 100);
    let d = sbmrd::hamming_distortion(&graph, &recon).unwrap();
    // Trial 0 of the Monte Carlo run is the dumped trial.
    assert_eq!(d as f64, v["mean_distortion"].as_f64().unwrap());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(sbmrd(&["bogus"], "").status.code(), Some(2));
    assert_eq!(
        sbmrd(&["curve", "--points", "x"], REF_SBM).status.code(),
        Some(2)
    );
}
