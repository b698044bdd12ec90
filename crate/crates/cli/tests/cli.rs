use std::process::{Command, Output};

use serde_json::Value;

fn subseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subseq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = subseq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn count_prints_exact_and_log_values() {
    let v = json_ok(&["count", "--text", "abab", "--pattern", "ab"]);
    assert_eq!(v["n"], 4);
    assert_eq!(v["m"], 2);
    assert_eq!(v["count"], "3");
    assert!((v["ln_count"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn count_float_mode_has_null_decimal() {
    let v = json_ok(&[
        "count",
        "--text",
        "aaaaaa",
        "--pattern",
        "aaa",
        "--mode",
        "float",
    ]);
    assert!(v["count"].is_null());
    assert!((v["ln_count"].as_f64().unwrap() - 20f64.ln()).abs() < 1e-9);
}

#[test]
fn count_zero_has_null_log() {
    let v = json_ok(&[
        "count",
        "--text",
        "aaa",
        "--pattern",
        "b",
        "--alphabet",
        "ab",
    ]);
    assert_eq!(v["count"], "0");
    assert!(v["ln_count"].is_null());
}

#[test]
fn count_rejects_symbol_outside_alphabet() {
    let out = subseq(&[
        "count",
        "--text",
        "abc",
        "--pattern",
        "ab",
        "--alphabet",
        "ab",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn moments_reports_mean_and_exact_companions() {
    let v = json_ok(&[
        "moments",
        "--n",
        "10",
        "--pattern",
        "ab",
        "--probs",
        "0.5,0.5",
    ]);
    assert_eq!(v["mean_z_exact"], "45/4");
    assert_eq!(v["mean_z"]["sign"], 1);
    assert!((v["mean_z"]["ln_abs"].as_f64().unwrap() - 11.25f64.ln()).abs() < 1e-12);
    assert!(v["sigma1_sq_exact"].is_string());
}

#[test]
fn moments_rejects_bad_probabilities() {
    let out = subseq(&[
        "moments",
        "--n",
        "10",
        "--pattern",
        "ab",
        "--probs",
        "0.5,0.6",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_echoes_rationalization_and_sums_levels() {
    let v = json_ok(&[
        "decompose",
        "--text",
        "abba",
        "--pattern",
        "ab",
        "--probs",
        "0.3,0.7",
    ]);
    assert_eq!(v["probabilities"], serde_json::json!(["3/10", "7/10"]));
    assert_eq!(v["z"], "2");
    assert_eq!(v["residual"], "0");
    assert_eq!(v["v"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_requires_seed() {
    let out = subseq(&[
        "simulate",
        "--n",
        "50",
        "--pattern",
        "ab",
        "--probs",
        "0.5,0.5",
        "--trials",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn simulate_writes_files_independent_of_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = [
        "simulate",
        "--n",
        "200",
        "--pattern",
        "aba",
        "--probs",
        "0.5,0.5",
        "--trials",
        "500",
        "--seed",
        "11",
    ];
    let mut args1 = base.to_vec();
    args1.extend(["--workers", "1", "--out", a.path().to_str().unwrap()]);
    let mut args4 = base.to_vec();
    args4.extend(["--workers", "4", "--out", b.path().to_str().unwrap()]);
    let s1 = json_ok(&args1);
    let s4 = json_ok(&args4);
    assert_eq!(s1, s4);
    assert_eq!(s1["trials"], 500);
    let c1 = std::fs::read_to_string(a.path().join("samples.csv")).unwrap();
    let c4 = std::fs::read_to_string(b.path().join("samples.csv")).unwrap();
    assert_eq!(c1, c4);
    assert!(c1.starts_with("standardized_value\n"));
    assert_eq!(c1.lines().count(), 501);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary, s1);
}

#[test]
fn simulate_lognormal_regime() {
    let v = json_ok(&[
        "simulate",
        "--n",
        "2000",
        "--pattern",
        "const:a,60",
        "--probs",
        "0.5,0.5",
        "--trials",
        "300",
        "--seed",
        "4",
        "--regime",
        "lognormal",
    ]);
    assert_eq!(v["regime"], "lognormal");
    assert!(v["companion"].is_object());
}

#[test]
fn channel_mi_methods_agree() {
    let base = ["channel-mi", "--n", "4", "--d", "0.3", "--probs", "0.6,0.4"];
    let mut counts = base.to_vec();
    counts.extend(["--method", "counts"]);
    let mut direct = base.to_vec();
    direct.extend(["--method", "direct"]);
    let a = json_ok(&counts);
    let b = json_ok(&direct);
    assert_eq!(a["method"], "counts");
    assert!(a.get("stderr").is_none());
    let (x, y) = (a["mi"].as_f64().unwrap(), b["mi"].as_f64().unwrap());
    assert!((x - y).abs() < 1e-12 * x.max(1.0));
}

#[test]
fn channel_mi_units() {
    let bits = json_ok(&["channel-mi", "--n", "3", "--d", "0.5", "--probs", "0.5,0.5"]);
    let nats = json_ok(&[
        "channel-mi",
        "--n",
        "3",
        "--d",
        "0.5",
        "--probs",
        "0.5,0.5",
        "--units",
        "nats",
    ]);
    let r = nats["mi"].as_f64().unwrap() / bits["mi"].as_f64().unwrap();
    assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn channel_mi_monte_carlo_needs_seed_and_reports_stderr() {
    let base = [
        "channel-mi",
        "--n",
        "4",
        "--d",
        "0.3",
        "--probs",
        "0.5,0.5",
        "--method",
        "mc",
    ];
    let mut no_seed = base.to_vec();
    no_seed.extend(["--trials", "100"]);
    assert_eq!(subseq(&no_seed).status.code(), Some(2));
    let mut ok = base.to_vec();
    ok.extend(["--trials", "20000", "--seed", "9"]);
    let v = json_ok(&ok);
    let exact = json_ok(&["channel-mi", "--n", "4", "--d", "0.3", "--probs", "0.5,0.5"]);
    let (mi, se) = (v["mi"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!(se > 0.0);
    assert!((mi - exact["mi"].as_f64().unwrap()).abs() <= 4.0 * se);
}

#[test]
fn channel_mi_rejects_invalid_deletion_probability() {
    let out = subseq(&["channel-mi", "--n", "4", "--d", "1.5", "--probs", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_passes_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_ok(&[
        "preset",
        "tllow_alternating",
        "--n",
        "24",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(v["passed"], true);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn preset_gate_failure_exits_nonzero_with_details() {
    // A 30 + 10 letter block pattern in a text of length 60 is far from normal.
    let out = subseq(&[
        "preset",
        "tka_skewed",
        "--n",
        "60",
        "--m",
        "40",
        "--trials",
        "2000",
        "--seeds",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL]"));
}

#[test]
fn unknown_preset_is_an_error() {
    assert_eq!(subseq(&["preset", "nope"]).status.code(), Some(2));
}
