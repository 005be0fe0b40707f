use std::fs;
use std::path::Path;

use l2gcn::controller::{
    load_policy, rollout, save_policy, search, ControllerPolicy, DecisionMode, RewardConfig, RewardRecord,
    RolloutConfig, SearchConfig,
};
use l2gcn::graph::{build_csr, generate_sbm, load_dataset, write_dataset, GraphDataset, Split};
use l2gcn::probe::{
    capacity_vs_depth, mean_with_std_error, wl_distinguish, wl_flags, wl_refine, write_capacity_csv, CapacityRow,
    PairSampler,
};
use l2gcn::rng::{seeded, streams};
use l2gcn::tensor::Scalar;
use l2gcn::train::{
    evaluate, train_conventional_fullbatch, train_layerwise, train_vanilla_minibatch, write_loss_curve, EvalSummary,
    JointTrainConfig, LayerTrainConfig, LossKind, RunMetrics, TrainOutcome, TrainingData,
};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::{Precision, RunConfig, TrainerKind};
use crate::error::{io_err, CliError};

pub fn load_data(cfg: &RunConfig) -> Result<GraphDataset, CliError> {
    match (&cfg.dataset, &cfg.sbm) {
        (Some(dir), None) => Ok(load_dataset(dir)?),
        (None, Some(sbm)) => Ok(generate_sbm(&sbm.params(cfg.seed))?),
        _ => Err(CliError::config("exactly one data source is required")),
    }
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn eval_summary<T: Scalar>(outcome: &TrainOutcome<T>, data: &TrainingData<T>) -> Result<EvalSummary, CliError> {
    let optional = |split: Split| -> Result<_, CliError> {
        if data.masks.get(split).is_empty() {
            Ok(None)
        } else {
            Ok(Some(evaluate(&outcome.model, data, split)?))
        }
    };
    Ok(EvalSummary {
        train: evaluate(&outcome.model, data, Split::Train)?,
        val: optional(Split::Val)?,
        test: optional(Split::Test)?,
    })
}

fn loss_kind(ds: &GraphDataset) -> LossKind {
    LossKind::for_labels(ds.labels())
}

/// Runs one trainer and evaluates the result.
pub fn run_trainer<T: Scalar>(
    cfg: &RunConfig,
    ds: &GraphDataset,
    data: &TrainingData<T>,
    trainer: TrainerKind,
    broadcast_epochs: bool,
) -> Result<(TrainOutcome<T>, RunMetrics), CliError> {
    let outcome = match trainer {
        TrainerKind::Layerwise => {
            let schedule = cfg.layer_schedule(broadcast_epochs)?;
            let layers = LayerTrainConfig::schedule(
                &cfg.hidden,
                &schedule,
                cfg.batch_size,
                cfg.learning_rate,
                cfg.seed,
                loss_kind(ds),
            )?;
            train_layerwise(data, &layers, None)?
        }
        TrainerKind::Fullbatch | TrainerKind::VanillaMinibatch => {
            let joint = JointTrainConfig {
                hidden_dims: cfg.hidden.clone(),
                epochs: cfg.joint_epochs()?,
                batch_size: cfg.batch_size,
                learning_rate: cfg.learning_rate,
                seed: cfg.seed,
                loss_kind: loss_kind(ds),
            };
            if trainer == TrainerKind::Fullbatch {
                train_conventional_fullbatch(data, &joint)?
            } else {
                train_vanilla_minibatch(data, &joint)?
            }
        }
    };
    let metrics = RunMetrics {
        trainer: trainer.name().to_string(),
        precision: T::NAME.to_string(),
        seed: cfg.seed,
        epochs_per_layer: outcome.epochs_per_layer.clone(),
        eval: eval_summary(&outcome, data)?,
        ledger: outcome.ledger.clone(),
        train_time_secs: outcome.ledger.wall_time_secs,
    };
    Ok((outcome, metrics))
}

fn write_run_artifacts<T: Scalar>(out: &Path, outcome: &TrainOutcome<T>) -> Result<(), CliError> {
    write_loss_curve(&out.join("loss_curve.csv"), &outcome.history)?;
    outcome.model.save_json(&out.join("model.json"))?;
    Ok(())
}

fn headline(m: &RunMetrics) -> (&'static str, f64) {
    match &m.eval.test {
        Some(t) => ("test_micro_f1", t.micro_f1),
        None => ("train_micro_f1", m.eval.train.micro_f1),
    }
}

macro_rules! with_precision {
    ($p:expr, $f:ident ( $($arg:expr),* )) => {
        match $p {
            Precision::F32 => $f::<f32>($($arg),*),
            Precision::F64 => $f::<f64>($($arg),*),
        }
    };
}

pub fn cmd_train(cfg: &RunConfig) -> Result<RunMetrics, CliError> {
    cfg.validate_training()?;
    if cfg.trainer == TrainerKind::Layerwise {
        cfg.layer_schedule(false)?;
    } else {
        cfg.joint_epochs()?;
    }
    let ds = load_data(cfg)?;
    with_precision!(cfg.precision, train_typed(cfg, &ds))
}

fn train_typed<T: Scalar>(cfg: &RunConfig, ds: &GraphDataset) -> Result<RunMetrics, CliError> {
    let data = TrainingData::<T>::new(ds, cfg.self_loops)?;
    let (outcome, metrics) = run_trainer(cfg, ds, &data, cfg.trainer, false)?;
    create_out(&cfg.out)?;
    write_json(&cfg.out.join("metrics.json"), &metrics)?;
    write_run_artifacts(&cfg.out, &outcome)?;
    let (name, f1) = headline(&metrics);
    println!(
        "trainer={} {name}={f1:.4} train_time_secs={:.3} fa_calls={} epochs={:?}",
        metrics.trainer, metrics.train_time_secs, metrics.ledger.fa_calls, metrics.epochs_per_layer
    );
    Ok(metrics)
}

/// `schedule.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub schedule: Vec<usize>,
    pub granularity: usize,
    pub max_epochs_per_layer: usize,
    /// `search` or `loaded`.
    pub policy_source: String,
}

/// `metrics.json` of the search command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMetrics {
    pub schedule: Vec<usize>,
    pub iterations: usize,
    pub best_reward: Option<f64>,
    pub final_mean_reward: Option<f64>,
    pub search_time_secs: f64,
    pub run: RunMetrics,
}

fn write_reward_history(path: &Path, history: &[RewardRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in history {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_reward_history(path: &Path) -> Result<Vec<RewardRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

pub fn cmd_search(cfg: &RunConfig) -> Result<SearchMetrics, CliError> {
    cfg.validate_training()?;
    let c = &cfg.controller;
    if let Some(p) = &c.load_policy {
        if !p.is_file() {
            return Err(CliError::config(format!("policy file {} does not exist", p.display())));
        }
    } else if c.iterations == 0 || c.rollouts_per_iteration == 0 {
        return Err(CliError::config("iterations and rollouts must be at least 1"));
    }
    let ds = load_data(cfg)?;
    with_precision!(cfg.precision, search_typed(cfg, &ds))
}

fn search_typed<T: Scalar>(cfg: &RunConfig, ds: &GraphDataset) -> Result<SearchMetrics, CliError> {
    let c = &cfg.controller;
    let data = TrainingData::<T>::new(ds, cfg.self_loops)?;
    let cap = c.max_epochs_per_layer;
    let rollout_cfg = RolloutConfig {
        layers: LayerTrainConfig::schedule(
            &cfg.hidden,
            &vec![cap; cfg.depth()],
            cfg.batch_size,
            cfg.learning_rate,
            cfg.seed,
            loss_kind(ds),
        )?,
        max_epochs_per_layer: cap,
    };
    create_out(&cfg.out)?;

    let (policy, schedule, history, best_reward, search_time_secs, source) = match &c.load_policy {
        Some(path) => {
            let policy = load_policy(path)?;
            let mut rng = seeded(cfg.seed, streams::rollout(u64::from(u32::MAX)));
            let deployed = rollout(&policy, &data, &rollout_cfg, DecisionMode::Threshold, &mut rng)?;
            (policy, deployed.trajectory.schedule, Vec::new(), None, 0.0, "loaded")
        }
        None => {
            let reward = RewardConfig {
                loss_weight: c.loss_weight.unwrap_or(1.0),
                epoch_weight: c
                    .epoch_weight
                    .unwrap_or_else(|| RewardConfig::for_budget(cfg.depth(), cap).epoch_weight),
                baseline_decay: c.baseline_decay,
                use_baseline: c.use_baseline,
            };
            let mut policy = ControllerPolicy::new(
                c.hidden_dim,
                c.embed_dim,
                c.granularity,
                reward,
                c.learning_rate,
                cfg.seed,
            )?;
            policy.rho_threshold = c.rho_threshold;
            let result = search(
                &data,
                policy,
                &SearchConfig {
                    rollout: rollout_cfg.clone(),
                    iterations: c.iterations,
                    rollouts_per_iteration: c.rollouts_per_iteration,
                    seed: cfg.seed,
                },
            )?;
            write_reward_history(&cfg.out.join("reward_history.csv"), &result.reward_history)?;
            (
                result.policy,
                result.deployed.trajectory.schedule,
                result.reward_history,
                Some(result.best.reward),
                result.search_time_secs,
                "search",
            )
        }
    };
    save_policy(&policy, &cfg.out.join("policy.json"))?;
    write_json(
        &cfg.out.join("schedule.json"),
        &ScheduleFile {
            schedule: schedule.clone(),
            granularity: policy.granularity,
            max_epochs_per_layer: cap,
            policy_source: source.to_string(),
        },
    )?;

    let final_cfg = RunConfig {
        epochs: schedule.clone(),
        ..cfg.clone()
    };
    let (outcome, run) = run_trainer(&final_cfg, ds, &data, TrainerKind::Layerwise, false)?;
    write_run_artifacts(&cfg.out, &outcome)?;
    let metrics = SearchMetrics {
        schedule,
        iterations: history.len(),
        best_reward,
        final_mean_reward: history.last().map(|r| r.mean_reward),
        search_time_secs,
        run,
    };
    write_json(&cfg.out.join("metrics.json"), &metrics)?;
    let (name, f1) = headline(&metrics.run);
    println!(
        "schedule={:?} {name}={f1:.4} search_time_secs={:.3} train_time_secs={:.3}",
        metrics.schedule, metrics.search_time_secs, metrics.run.train_time_secs
    );
    Ok(metrics)
}

/// One line of `bench.csv`. Ratios are relative to the first trainer listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub trainer: String,
    pub num_nodes: usize,
    pub seed: u64,
    pub fa_calls: u64,
    pub ft_calls: u64,
    pub flops: u64,
    pub peak_activation_bytes: u64,
    pub peak_batch_bytes: u64,
    pub materialized_bytes: u64,
    pub train_time_secs: f64,
    pub test_micro_f1: Option<f64>,
    pub fa_ratio: f64,
    pub peak_bytes_ratio: f64,
    pub time_ratio: f64,
    pub rss_peak_kb: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub reference: String,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<RunMetrics>,
}

/// Peak resident set size of this process so far, where the platform
/// reports it.
pub fn rss_peak_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport, CliError> {
    cfg.validate_training()?;
    let mut kinds = cfg.bench_trainers.clone();
    kinds.dedup();
    if kinds.len() < 2 || kinds.iter().enumerate().any(|(i, k)| kinds[..i].contains(k)) {
        return Err(CliError::config("bench needs at least two distinct trainers"));
    }
    cfg.layer_schedule(true)?;
    if kinds.iter().any(|&k| k != TrainerKind::Layerwise) {
        cfg.joint_epochs()?;
    }
    let ds = load_data(cfg)?;
    with_precision!(cfg.precision, bench_typed(cfg, &ds, &kinds))
}

fn bench_typed<T: Scalar>(cfg: &RunConfig, ds: &GraphDataset, kinds: &[TrainerKind]) -> Result<BenchReport, CliError> {
    let data = TrainingData::<T>::new(ds, cfg.self_loops)?;
    let mut runs = Vec::with_capacity(kinds.len());
    let mut rss = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let (_, metrics) = run_trainer(cfg, ds, &data, kind, true)?;
        rss.push(if cfg.sample_rss { rss_peak_kb() } else { None });
        runs.push(metrics);
    }
    let reference = &runs[0].ledger;
    let rows: Vec<BenchRow> = runs
        .iter()
        .zip(&rss)
        .map(|(m, &rss_peak_kb)| BenchRow {
            trainer: m.trainer.clone(),
            num_nodes: ds.num_nodes(),
            seed: cfg.seed,
            fa_calls: m.ledger.fa_calls,
            ft_calls: m.ledger.ft_calls,
            flops: m.ledger.flops,
            peak_activation_bytes: m.ledger.peak_activation_bytes,
            peak_batch_bytes: m.ledger.peak_batch_bytes,
            materialized_bytes: m.ledger.materialized_bytes,
            train_time_secs: m.train_time_secs,
            test_micro_f1: m.eval.test.as_ref().map(|t| t.micro_f1),
            fa_ratio: ratio(m.ledger.fa_calls as f64, reference.fa_calls as f64),
            peak_bytes_ratio: ratio(
                m.ledger.peak_activation_bytes as f64,
                reference.peak_activation_bytes as f64,
            ),
            time_ratio: ratio(m.train_time_secs, reference.wall_time_secs),
            rss_peak_kb,
        })
        .collect();
    create_out(&cfg.out)?;
    write_bench_csv(&cfg.out.join("bench.csv"), &rows, cfg.sample_rss)?;
    let report = BenchReport {
        reference: runs[0].trainer.clone(),
        rows,
        runs,
    };
    write_json(&cfg.out.join("bench.json"), &report)?;
    for r in &report.rows {
        println!(
            "trainer={} fa_calls={} peak_batch_bytes={} peak_activation_bytes={} train_time_secs={:.3} test_micro_f1={}",
            r.trainer,
            r.fa_calls,
            r.peak_batch_bytes,
            r.peak_activation_bytes,
            r.train_time_secs,
            r.test_micro_f1.map_or("-".into(), |f| format!("{f:.4}"))
        );
    }
    Ok(report)
}

/// Writes `bench.csv`; the `rss_peak_kb` column is present only when RSS
/// sampling was requested.
pub fn write_bench_csv(path: &Path, rows: &[BenchRow], with_rss: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec![
        "trainer",
        "num_nodes",
        "seed",
        "fa_calls",
        "ft_calls",
        "flops",
        "peak_activation_bytes",
        "peak_batch_bytes",
        "materialized_bytes",
        "train_time_secs",
        "test_micro_f1",
        "fa_ratio",
        "peak_bytes_ratio",
        "time_ratio",
    ];
    if with_rss {
        header.push("rss_peak_kb");
    }
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let mut rec = vec![
            r.trainer.clone(),
            r.num_nodes.to_string(),
            r.seed.to_string(),
            r.fa_calls.to_string(),
            r.ft_calls.to_string(),
            r.flops.to_string(),
            r.peak_activation_bytes.to_string(),
            r.peak_batch_bytes.to_string(),
            r.materialized_bytes.to_string(),
            r.train_time_secs.to_string(),
            opt(r.test_micro_f1.map(|f| f.to_string())),
            r.fa_ratio.to_string(),
            r.peak_bytes_ratio.to_string(),
            r.time_ratio.to_string(),
        ];
        if with_rss {
            rec.push(opt(r.rss_peak_kb.map(|k| k.to_string())));
        }
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_bench_csv(path: &Path) -> Result<Vec<BenchRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let has_rss = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .any(|h| h == "rss_peak_kb");
    #[derive(Deserialize)]
    struct Row {
        trainer: String,
        num_nodes: usize,
        seed: u64,
        fa_calls: u64,
        ft_calls: u64,
        flops: u64,
        peak_activation_bytes: u64,
        peak_batch_bytes: u64,
        materialized_bytes: u64,
        train_time_secs: f64,
        test_micro_f1: Option<f64>,
        fa_ratio: f64,
        peak_bytes_ratio: f64,
        time_ratio: f64,
        #[serde(default)]
        rss_peak_kb: Option<u64>,
    }
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(|e| io_err(path, e))?;
            Ok(BenchRow {
                trainer: row.trainer,
                num_nodes: row.num_nodes,
                seed: row.seed,
                fa_calls: row.fa_calls,
                ft_calls: row.ft_calls,
                flops: row.flops,
                peak_activation_bytes: row.peak_activation_bytes,
                peak_batch_bytes: row.peak_batch_bytes,
                materialized_bytes: row.materialized_bytes,
                train_time_secs: row.train_time_secs,
                test_micro_f1: row.test_micro_f1,
                fa_ratio: row.fa_ratio,
                peak_bytes_ratio: row.peak_bytes_ratio,
                time_ratio: row.time_ratio,
                rss_peak_kb: if has_rss { row.rss_peak_kb } else { None },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCase {
    pub name: String,
    pub expected: bool,
    pub observed: bool,
}

impl SelfTestCase {
    pub fn passed(&self) -> bool {
        self.expected == self.observed
    }
}

fn cycle_edges(len: usize, offset: usize) -> Vec<(usize, usize)> {
    (0..len).map(|i| (offset + i, offset + (i + 1) % len)).collect()
}

/// Known-answer WL suite: P3 vs K3 separated, C6 vs 2×C3 never separated,
/// and random graphs never separated from relabelings of themselves.
pub fn wl_selftest(seed: u64) -> Vec<SelfTestCase> {
    let p3 = build_csr(&[(0, 1), (1, 2)], 3).expect("valid");
    let k3 = build_csr(&cycle_edges(3, 0), 3).expect("valid");
    let c6 = build_csr(&cycle_edges(6, 0), 6).expect("valid");
    let mut two_c3_edges = cycle_edges(3, 0);
    two_c3_edges.extend(cycle_edges(3, 3));
    let two_c3 = build_csr(&two_c3_edges, 6).expect("valid");

    let mut cases = vec![SelfTestCase {
        name: "P3 vs K3".into(),
        expected: true,
        observed: wl_distinguish(&p3, &k3, 1),
    }];
    cases.push(SelfTestCase {
        name: "C6 vs 2xC3, rounds 0..=6".into(),
        expected: false,
        observed: (0..=6).any(|r| wl_distinguish(&c6, &two_c3, r)),
    });
    let mut rng = seeded(seed, streams::PROBE_PAIRS);
    let mut separated = 0;
    for _ in 0..100 {
        use rand::Rng as _;
        let n = rng.random_range(4..=16);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < 0.3 {
                    edges.push((u, v));
                }
            }
        }
        let g = build_csr(&edges, n).expect("valid");
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let h = g.permuted(&perm);
        if wl_distinguish(&g, &h, n) || wl_refine(&g, n, None) != wl_refine(&h, n, None) {
            separated += 1;
        }
    }
    cases.push(SelfTestCase {
        name: "100 random permutation pairs".into(),
        expected: false,
        observed: separated > 0,
    });
    cases
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub depth: usize,
    pub mean_estimate: f64,
    pub pooled_std_error: f64,
    pub mean_val_micro_f1: Option<f64>,
}

/// `probe_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<CapacityRow>,
    pub depths: Vec<DepthSummary>,
    /// Pairs a model separated that 1-WL with as many rounds did not.
    pub wl_inclusion_violations: usize,
}

pub fn cmd_wl_selftest(cfg: &RunConfig) -> Result<Vec<SelfTestCase>, CliError> {
    let cases = wl_selftest(cfg.seed);
    for c in &cases {
        println!(
            "[{}] {}: expected {}, observed {}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.expected,
            c.observed
        );
    }
    if cases.iter().all(SelfTestCase::passed) {
        Ok(cases)
    } else {
        Err(CliError::runtime("WL self-test failed"))
    }
}

pub fn cmd_probe(cfg: &RunConfig) -> Result<ProbeReport, CliError> {
    let p = &cfg.probe;
    let runs = capacity_vs_depth(p)?;
    let mut violations = 0;
    for &seed in &p.seeds {
        let pairs = PairSampler::new(seed, p.min_nodes, p.max_nodes)?.take_pairs(p.num_pairs)?;
        for run in runs.iter().filter(|r| r.row.seed == seed) {
            let wl = wl_flags(&pairs, run.row.depth);
            violations += run.flags.iter().zip(&wl).filter(|(&m, &w)| m && !w).count();
        }
    }
    let rows: Vec<CapacityRow> = runs.iter().map(|r| r.row.clone()).collect();
    let depths = p
        .depths
        .iter()
        .map(|&d| {
            let at: Vec<&CapacityRow> = rows.iter().filter(|r| r.depth == d).collect();
            let (mean_estimate, pooled_std_error) = mean_with_std_error(&at);
            let f1: Vec<f64> = runs
                .iter()
                .filter(|r| r.row.depth == d)
                .filter_map(|r| r.val_micro_f1)
                .collect();
            DepthSummary {
                depth: d,
                mean_estimate,
                pooled_std_error,
                mean_val_micro_f1: (!f1.is_empty()).then(|| f1.iter().sum::<f64>() / f1.len() as f64),
            }
        })
        .collect();
    create_out(&cfg.out)?;
    write_capacity_csv(&cfg.out.join("capacity.csv"), &rows)?;
    let report = ProbeReport {
        rows,
        depths,
        wl_inclusion_violations: violations,
    };
    write_json(&cfg.out.join("probe_summary.json"), &report)?;
    for d in &report.depths {
        println!(
            "depth={} capacity={:.4} pooled_se={:.4} val_micro_f1={}",
            d.depth,
            d.mean_estimate,
            d.pooled_std_error,
            d.mean_val_micro_f1.map_or("-".into(), |f| format!("{f:.4}"))
        );
    }
    println!("wl_inclusion_violations={violations}");
    Ok(report)
}

pub fn cmd_gen_sbm(cfg: &RunConfig) -> Result<GraphDataset, CliError> {
    if cfg.dataset.is_some() {
        return Err(CliError::config("gen-sbm writes a dataset; --dataset is not accepted"));
    }
    let sbm = cfg.sbm.clone().unwrap_or_default();
    let ds = generate_sbm(&sbm.params(cfg.seed))?;
    write_dataset(&ds, &cfg.out)?;
    println!(
        "wrote {} nodes, {} edges, {} classes to {}",
        ds.num_nodes(),
        ds.num_edges(),
        ds.class_count(),
        cfg.out.display()
    );
    Ok(ds)
}
