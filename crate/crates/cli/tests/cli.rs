use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn multicode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multicode"))
        .args(args)
        .env("MULTICODE_THREADS", "1")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, v: serde_json::Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponent_direct_and_dual_agree() {
    let o = multicode(&["exponent", "--channel", "bsc:0.1", "--type", "0.5,0.5", "--rate", "0.2"]);
    assert!(o.status.success());
    let vals: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    // I, C, E_r direct, E_r dual, E_TH
    assert!((vals[0] - vals[1]).abs() < 1e-9);
    assert!((vals[2] - vals[3]).abs() < 1e-6);
    assert!(multicode(&["exponent", "--channel", "bogus", "--type", "1", "--rate", "0"]).status.code() == Some(2));
}

#[test]
fn build_then_simulate_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let book = |l: usize| json!({"length": l, "composition": [l / 2, l - l / 2], "rate": 0.25});
    let params = |l: usize| json!({"alphabet": 2, "ratio_bound": 0.5, "length_bound": l, "books": [book(l), book(l * 3 / 4)]});
    let p32 = write(dir.path(), "p32.json", params(32));
    let lib32 = dir.path().join("lib32.json");
    let o = multicode(&["build-library", "--params", &p32, "--seed", "3", "--out", lib32.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(lib32.exists());

    let cfg = write(
        dir.path(),
        "exp.json",
        json!({
            "version": 1,
            "channel": {"kind": "identity", "size": 2},
            "libraries": [
                {"kind": "file", "path": "lib32.json"},
                {"kind": "params", "params": params(48), "seed": 5}
            ],
            "schedule": {"kind": "round_robin", "length": 20},
            "trials": 2,
            "seed": 0,
            "eta": 0.05,
            "guard": 2
        }),
    );
    let report = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    // the seed is mandatory
    assert!(!multicode(&["simulate", "--config", &cfg]).status.success());
    let o = multicode(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--json",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["seed"], 9);
    for b in doc["books"].as_array().unwrap() {
        assert_eq!(b["measured"], 20);
        assert_eq!(b["error_rate"]["count"], 0);
    }
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() == 5);

    let verdicts = dir.path().join("verdicts.csv");
    let o = multicode(&["compare", "--report", report.to_str().unwrap(), "--csv", verdicts.to_str().unwrap()]);
    assert!(o.status.code().is_some());
    assert!(verdicts.exists());
    assert!(!stdout(&o).contains("FAIL") || o.status.code() == Some(1));
}

#[test]
fn verify_lemmas_small() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "lemmas.json",
        json!({
            "type_max_n": 6,
            "type_max_alphabet": 2,
            "channel_identity_instances": 20,
            "second_order_max_n": 6,
            "js_instances": 100,
            "expurgation_lengths": [8, 9],
            "expurgation_gammas": [0.3, 0.6],
            "sampler_draws": 1000,
            "packing_lengths": [6, 8]
        }),
    );
    let out = dir.path().join("lemmas.csv");
    let o = multicode(&["verify-lemmas", "--config", &cfg, "--csv", out.to_str().unwrap()]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("type"));
    assert!(out.exists());
}
