use std::path::Path;
use std::process::{Command, Output};

use l2gcn::probe::read_capacity_csv;
use l2gcn::train::{read_loss_curve, LayerwiseModel, RunMetrics};
use l2gcn_cli::commands::{read_bench_csv, read_reward_history, ScheduleFile, SearchMetrics};
use serde_json::Value;

const SMALL_SBM: &[&str] = &["--sbm-nodes", "100", "--sbm-blocks", "2", "--sbm-feature-dim", "4"];

fn l2gcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2gcn")).args(args).output().unwrap()
}

/// `l2gcn <command> <small SBM flags> <extra>`.
fn sbm_cmd(command: &str, extra: &[&str]) -> Output {
    let args: Vec<&str> = std::iter::once(command)
        .chain(SMALL_SBM.iter().copied())
        .chain(extra.iter().copied())
        .collect();
    l2gcn(&args)
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

/// Drops every `*_secs` field, recursively.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_secs"));
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn metrics_without_timing(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    strip_timing(&mut v);
    v
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn train_writes_readable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbm_cmd(
        "train",
        &[
            "--epochs",
            "5,5",
            "--batch",
            "16",
            "--lr",
            "0.01",
            "--out",
            &p(dir.path(), "t"),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("test_micro_f1=") && stdout.contains("fa_calls=2"));
    let t = dir.path().join("t");
    let metrics: RunMetrics = serde_json::from_str(&std::fs::read_to_string(t.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics.epochs_per_layer, vec![5, 5]);
    assert_eq!(metrics.ledger.fa_calls, 2);
    assert_eq!(read_loss_curve(&t.join("loss_curve.csv")).unwrap().len(), 10);
    let model = LayerwiseModel::<f32>::load_json(&t.join("model.json")).unwrap();
    assert_eq!(model.hidden_dims(), vec![16, 16]);
}

#[test]
fn schedule_length_mismatch_is_a_config_error() {
    let out = sbm_cmd("train", &["--epochs", "80", "--out", "/tmp/unused-l2gcn"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("depth"));
}

#[test]
fn missing_dataset_and_bad_flags_exit_with_two() {
    assert_eq!(
        l2gcn(&["train", "--dataset", "/definitely/not/here"]).status.code(),
        Some(2)
    );
    assert_eq!(l2gcn(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(l2gcn(&["train"]).status.code(), Some(2));
    assert_eq!(l2gcn(&["--help"]).status.code(), Some(0));
}

#[test]
fn identical_runs_give_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    for trainer in ["layerwise", "fullbatch", "vanilla-minibatch"] {
        let mut outs = Vec::new();
        for i in 0..2 {
            let o = p(dir.path(), &format!("{trainer}{i}"));
            let out = sbm_cmd(
                "train",
                &[
                    "--trainer",
                    trainer,
                    "--epochs",
                    "4",
                    "--hidden",
                    "8",
                    "--batch",
                    "16",
                    "--out",
                    &o,
                ],
            );
            assert!(out.status.success());
            outs.push(metrics_without_timing(
                &dir.path().join(format!("{trainer}{i}/metrics.json")),
            ));
        }
        assert_eq!(outs[0], outs[1], "{trainer}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"sbm": {"num_nodes": 90, "blocks": 3, "feature_dim": 4}, "hidden": [8], "epochs": [3], "seed": 4}"#,
    )
    .unwrap();
    let out = l2gcn(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--epochs",
        "6",
        "--out",
        &p(dir.path(), "o"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: RunMetrics =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/metrics.json")).unwrap()).unwrap();
    assert_eq!((m.seed, m.epochs_per_layer), (4, vec![6]));
}

#[test]
fn gen_sbm_output_trains() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "data");
    let out = sbm_cmd("gen-sbm", &["--out", &data]);
    assert!(out.status.success());
    let out = l2gcn(&[
        "train",
        "--dataset",
        &data,
        "--epochs",
        "2,2",
        "--out",
        &p(dir.path(), "o"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        l2gcn(&["gen-sbm", "--dataset", &data, "--out", &data]).status.code(),
        Some(2)
    );
}

#[test]
fn search_logs_every_iteration_and_respects_granularity() {
    let dir = tempfile::tempdir().unwrap();
    let s = p(dir.path(), "s");
    let out = sbm_cmd(
        "search",
        &[
            "--hidden",
            "8,8",
            "--batch",
            "16",
            "--lr",
            "0.01",
            "--k",
            "5",
            "--cap",
            "20",
            "--iterations",
            "10",
            "--rollouts",
            "1",
            "--out",
            &s,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = dir.path().join("s");
    assert_eq!(read_reward_history(&s.join("reward_history.csv")).unwrap().len(), 10);
    let sched: ScheduleFile = serde_json::from_str(&std::fs::read_to_string(s.join("schedule.json")).unwrap()).unwrap();
    assert_eq!(sched.granularity, 5);
    assert!(sched.schedule.iter().all(|&e| e > 0 && e % 5 == 0 && e <= 20));
    let m: SearchMetrics = serde_json::from_str(&std::fs::read_to_string(s.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m.run.epochs_per_layer, sched.schedule);

    // deploy the saved policy on a deeper model without searching
    let out = sbm_cmd(
        "search",
        &[
            "--hidden",
            "8,8,8",
            "--batch",
            "16",
            "--lr",
            "0.01",
            "--cap",
            "20",
            "--load-policy",
            &p(&s, "policy.json"),
            "--out",
            &p(dir.path(), "s2"),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s2 = dir.path().join("s2");
    assert!(!s2.join("reward_history.csv").exists());
    let sched: ScheduleFile =
        serde_json::from_str(&std::fs::read_to_string(s2.join("schedule.json")).unwrap()).unwrap();
    assert_eq!(sched.schedule.len(), 3);
    assert_eq!(sched.policy_source, "loaded");
}

#[test]
fn bench_counts_aggregations_per_trainer() {
    let dir = tempfile::tempdir().unwrap();
    // 100 nodes in two blocks give 60 train nodes: 4 batches of 15
    let out = sbm_cmd(
        "bench",
        &[
            "--trainers",
            "layerwise,vanilla-minibatch",
            "--epochs",
            "3",
            "--batch",
            "15",
            "--out",
            &p(dir.path(), "b"),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_bench_csv(&dir.path().join("b/bench.csv")).unwrap();
    assert_eq!((rows[0].fa_calls, rows[1].fa_calls), (2, 24));
    assert_eq!((rows[0].fa_ratio, rows[1].fa_ratio), (1.0, 12.0));
    assert!(rows.iter().all(|r| r.rss_peak_kb.is_none()));

    let out = sbm_cmd("bench", &["--trainers", "layerwise", "--out", &p(dir.path(), "b2")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_writes_one_row_per_seed_and_depth() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for i in 0..2 {
        let o = p(dir.path(), &format!("p{i}"));
        let out = l2gcn(&[
            "probe",
            "--depths",
            "1,2,3",
            "--pairs",
            "200",
            "--seeds",
            "1,2,3,4,5",
            "--out",
            &o,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(dir.path().join(format!("p{i}/capacity.csv"))).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let rows = read_capacity_csv(&dir.path().join("p0/capacity.csv")).unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.num_pairs == 200));
}

#[test]
fn wl_selftest_passes() {
    let out = l2gcn(&["probe", "--wl-selftest"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("[PASS]").count(), 3);
}
