//! Drives the `teleop` binary through its subcommands.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn teleop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teleop"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn teleop")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = teleop(dir, args);
    assert!(
        out.status.success(),
        "teleop {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_train_run_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--shape",
            "triangle",
            "--out",
            "tri.jsonl",
            "--emg",
            "grasp",
            "--noise-q",
            "0.005",
        ],
    );
    assert!(d.join("tri.truth.csv").exists());
    ok(
        d,
        &[
            "synth",
            "--dataset",
            "150",
            "--out",
            "data.jsonl",
            "--seed",
            "4",
        ],
    );
    let train = ok(
        d,
        &[
            "train",
            "--data",
            "data.jsonl",
            "--model-out",
            "model.json",
            "--holdout",
            "0.2",
            "--report",
            "train.json",
        ],
    );
    let report: Value = serde_json::from_slice(&train.stdout).unwrap();
    assert!(report["holdout_accuracy"].as_f64().unwrap() >= 0.99);
    assert_eq!(report, json(&d.join("train.json")));

    ok(
        d,
        &[
            "run-sim",
            "--scenario",
            "tri.jsonl",
            "--model",
            "model.json",
            "--out-dir",
            "run",
        ],
    );
    let summary = json(&d.join("run/summary.json"));
    assert_eq!(summary["grip_changes"], 2);
    for axis in 0..3 {
        assert!(summary["vs_human_filtered"]["rmse"][axis].as_f64().unwrap() < 1e-12);
    }

    ok(
        d,
        &[
            "eval",
            "--human",
            "run/human_filtered.csv",
            "--robot",
            "run/commanded.csv",
            "--human",
            "run/human.csv",
            "--robot",
            "run/commanded.csv",
            "--shape",
            "identity",
            "--shape",
            "raw",
            "--report",
            "table.json",
            "--skip-us",
            "200000",
        ],
    );
    let table = json(&d.join("table.json"));
    for axis in ["X", "Y", "Z"] {
        assert!(table["shapes"]["identity"][axis]["rmse"].as_f64().unwrap() < 1e-12);
        assert!(table["shapes"]["raw"][axis]["rmse"].as_f64().unwrap() < 0.05);
    }
    assert!(table["counts"]["identity"]["paired"].as_u64().unwrap() > 900);
}

#[test]
fn run_sim_is_reproducible_and_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "synth",
            "--shape",
            "circle",
            "--duration",
            "5",
            "--out",
            "c.jsonl",
        ],
    );
    let channel = "latency_us=20000,jitter_us=10000,drop_prob=0.2,seed=8";
    ok(
        d,
        &[
            "run-sim",
            "--scenario",
            "c.jsonl",
            "--channel",
            channel,
            "--out-dir",
            "a",
        ],
    );
    ok(
        d,
        &[
            "run-sim",
            "--scenario",
            "c.jsonl",
            "--channel",
            channel,
            "--out-dir",
            "b",
        ],
    );
    ok(
        d,
        &[
            "run-sim",
            "--scenario",
            "c.jsonl",
            "--config",
            "a/config.toml",
            "--out-dir",
            "c",
        ],
    );
    let read = |p: &str| std::fs::read(d.join(p)).unwrap();
    assert_eq!(read("a/events.jsonl"), read("b/events.jsonl"));
    assert_eq!(read("a/events.jsonl"), read("c/events.jsonl"));
    assert_eq!(read("a/commanded.csv"), read("c/commanded.csv"));
    assert!(
        json(&d.join("a/summary.json"))["stats"]["messages_dropped"]
            .as_u64()
            .unwrap()
            > 0
    );
}

#[test]
fn errors_are_json_with_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let missing = teleop(
        d,
        &["run-sim", "--scenario", "absent.jsonl", "--out-dir", "x"],
    );
    assert_eq!(missing.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    assert_eq!(err["exit_code"], 2);

    ok(
        d,
        &[
            "synth",
            "--shape",
            "square",
            "--duration",
            "1",
            "--out",
            "s.jsonl",
        ],
    );
    let bad_channel = teleop(
        d,
        &[
            "run-sim",
            "--scenario",
            "s.jsonl",
            "--channel",
            "drop_prob=2",
            "--out-dir",
            "x",
        ],
    );
    assert_eq!(bad_channel.status.code(), Some(2));

    let unreachable = teleop(
        d,
        &[
            "run-live",
            "--role",
            "host1",
            "--addr",
            "127.0.0.1:9",
            "--scenario",
            "s.jsonl",
            "--connect-timeout-ms",
            "100",
            "--out-dir",
            "live",
        ],
    );
    assert_eq!(unreachable.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&unreachable.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
}
