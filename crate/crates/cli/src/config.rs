use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use l2gcn::controller::ControllerPolicy;
use l2gcn::graph::SbmParams;
use l2gcn::probe::CapacityConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TrainerKind {
    Layerwise,
    Fullbatch,
    VanillaMinibatch,
}

impl TrainerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrainerKind::Layerwise => "layerwise",
            TrainerKind::Fullbatch => "fullbatch",
            TrainerKind::VanillaMinibatch => "vanilla-minibatch",
        }
    }
}

/// Synthetic data source. `seed` defaults to the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmConfig {
    pub num_nodes: usize,
    pub blocks: usize,
    pub intra_prob: f64,
    pub inter_prob: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub seed: Option<u64>,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            num_nodes: 2708,
            blocks: 7,
            intra_prob: 0.01,
            inter_prob: 0.0005,
            feature_dim: 32,
            feature_noise: 0.5,
            seed: None,
        }
    }
}

impl SbmConfig {
    pub fn params(&self, run_seed: u64) -> SbmParams {
        SbmParams {
            block_sizes: SbmParams::balanced(self.num_nodes, self.blocks),
            intra_prob: self.intra_prob,
            inter_prob: self.inter_prob,
            feature_dim: self.feature_dim,
            feature_noise: self.feature_noise,
            seed: self.seed.unwrap_or(run_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Epochs between stop decisions (`k`).
    pub granularity: usize,
    pub max_epochs_per_layer: usize,
    pub iterations: usize,
    pub rollouts_per_iteration: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub learning_rate: f64,
    /// Defaults to 1.
    pub loss_weight: Option<f64>,
    /// Defaults to `1 / (L · max_epochs_per_layer)`.
    pub epoch_weight: Option<f64>,
    pub baseline_decay: f64,
    pub use_baseline: bool,
    pub rho_threshold: f64,
    pub load_policy: Option<PathBuf>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            granularity: 10,
            max_epochs_per_layer: 80,
            iterations: 20,
            rollouts_per_iteration: 4,
            hidden_dim: ControllerPolicy::DEFAULT_HIDDEN,
            embed_dim: ControllerPolicy::DEFAULT_EMBED,
            learning_rate: ControllerPolicy::DEFAULT_LR,
            loss_weight: None,
            epoch_weight: None,
            baseline_decay: 0.9,
            use_baseline: true,
            rho_threshold: 0.5,
            load_policy: None,
        }
    }
}

/// Everything a command needs. Loaded from `--config` JSON (all fields
/// optional), then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub sbm: Option<SbmConfig>,
    pub out: PathBuf,
    pub seed: u64,
    pub precision: Precision,
    pub trainer: TrainerKind,
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub self_loops: bool,
    pub controller: ControllerConfig,
    pub bench_trainers: Vec<TrainerKind>,
    pub sample_rss: bool,
    pub probe: CapacityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            sbm: None,
            out: PathBuf::from("out"),
            seed: 1,
            precision: Precision::F32,
            trainer: TrainerKind::Layerwise,
            hidden: vec![16, 16],
            epochs: vec![80, 80],
            batch_size: 256,
            learning_rate: 0.001,
            self_loops: true,
            controller: ControllerConfig::default(),
            bench_trainers: vec![
                TrainerKind::Layerwise,
                TrainerKind::VanillaMinibatch,
                TrainerKind::Fullbatch,
            ],
            sample_rss: false,
            probe: CapacityConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    /// Checks the fields shared by the training commands.
    pub fn validate_training(&self) -> Result<(), CliError> {
        match (&self.dataset, &self.sbm) {
            (Some(_), Some(_)) => return Err(CliError::config("give either a dataset or SBM parameters, not both")),
            (None, None) => return Err(CliError::config("no data source: pass --dataset or --sbm-nodes")),
            (Some(dir), None) if !dir.is_dir() => {
                return Err(CliError::config(format!(
                    "dataset directory {} does not exist",
                    dir.display()
                )))
            }
            _ => {}
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(CliError::config("hidden dims must be nonempty and positive"));
        }
        if self.epochs.is_empty() {
            return Err(CliError::config("epoch schedule is empty"));
        }
        if self.batch_size == 0 {
            return Err(CliError::config("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CliError::config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Per-layer epochs for the layer-wise trainer: one entry per layer, or
    /// a single entry broadcast to every layer when `broadcast` is set.
    pub fn layer_schedule(&self, broadcast: bool) -> Result<Vec<usize>, CliError> {
        if self.epochs.len() == self.depth() {
            Ok(self.epochs.clone())
        } else if broadcast && self.epochs.len() == 1 {
            Ok(vec![self.epochs[0]; self.depth()])
        } else {
            Err(CliError::config(format!(
                "epoch schedule has {} entries but depth is {}",
                self.epochs.len(),
                self.depth()
            )))
        }
    }

    /// Epoch count for the jointly trained baselines: a single value, or a
    /// per-layer schedule whose entries all agree.
    pub fn joint_epochs(&self) -> Result<usize, CliError> {
        match self.epochs.split_first() {
            Some((&first, rest)) if rest.iter().all(|&e| e == first) => Ok(first),
            _ => Err(CliError::config(format!(
                "joint trainers need a single epoch count, got {:?}",
                self.epochs
            ))),
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("invalid list entry '{p}'")))
        .collect()
}

/// Comma-separated list flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: std::str::FromStr> std::str::FromStr for List<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_list(s).map(List)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dataset directory (see the README for the file format).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub precision: Option<Precision>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SbmArgs {
    /// Use a synthetic SBM dataset with this many nodes.
    #[arg(long)]
    pub sbm_nodes: Option<usize>,
    #[arg(long)]
    pub sbm_blocks: Option<usize>,
    #[arg(long)]
    pub sbm_intra: Option<f64>,
    #[arg(long)]
    pub sbm_inter: Option<f64>,
    #[arg(long)]
    pub sbm_feature_dim: Option<usize>,
    #[arg(long)]
    pub sbm_noise: Option<f64>,
    /// SBM seed; defaults to the run seed.
    #[arg(long)]
    pub sbm_seed: Option<u64>,
}

impl SbmArgs {
    fn any(&self) -> bool {
        self.sbm_nodes.is_some()
            || self.sbm_blocks.is_some()
            || self.sbm_intra.is_some()
            || self.sbm_inter.is_some()
            || self.sbm_feature_dim.is_some()
            || self.sbm_noise.is_some()
            || self.sbm_seed.is_some()
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainingArgs {
    /// Hidden width per layer, e.g. `16,16`.
    #[arg(long)]
    pub hidden: Option<List<usize>>,
    /// Epochs per layer, e.g. `80,80`.
    #[arg(long)]
    pub epochs: Option<List<usize>>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Normalize without adding self-loops.
    #[arg(long)]
    pub no_self_loops: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ControllerArgs {
    /// Decision granularity `k` in epochs.
    #[arg(long)]
    pub k: Option<usize>,
    /// Per-layer epoch cap.
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long)]
    pub controller_hidden: Option<usize>,
    #[arg(long)]
    pub controller_lr: Option<f64>,
    /// Skip the search and deploy this saved policy.
    #[arg(long)]
    pub load_policy: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProbeArgs {
    /// Model depths, ascending, e.g. `1,2,3`.
    #[arg(long)]
    pub depths: Option<List<usize>>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seeds: Option<List<u64>>,
    /// Training epochs per layer for the probed models.
    #[arg(long)]
    pub probe_epochs: Option<usize>,
    /// Probe randomly initialized models instead of trained ones.
    #[arg(long)]
    pub untrained: bool,
}

/// Loads `--config` (if any) and applies every flag on top.
pub fn resolve(
    common: &CommonArgs,
    sbm: Option<&SbmArgs>,
    training: Option<&TrainingArgs>,
) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &common.dataset {
        cfg.dataset = Some(d.clone());
        cfg.sbm = None;
    }
    if let Some(s) = sbm.filter(|s| s.any()) {
        if common.dataset.is_some() {
            return Err(CliError::config("give either --dataset or --sbm-* flags, not both"));
        }
        cfg.dataset = None;
        let base = cfg.sbm.take().unwrap_or_default();
        cfg.sbm = Some(SbmConfig {
            num_nodes: s.sbm_nodes.unwrap_or(base.num_nodes),
            blocks: s.sbm_blocks.unwrap_or(base.blocks),
            intra_prob: s.sbm_intra.unwrap_or(base.intra_prob),
            inter_prob: s.sbm_inter.unwrap_or(base.inter_prob),
            feature_dim: s.sbm_feature_dim.unwrap_or(base.feature_dim),
            feature_noise: s.sbm_noise.unwrap_or(base.feature_noise),
            seed: s.sbm_seed.or(base.seed),
        });
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = common.precision {
        cfg.precision = p;
    }
    if let Some(t) = training {
        if let Some(List(h)) = &t.hidden {
            cfg.hidden = h.clone();
        }
        if let Some(List(e)) = &t.epochs {
            cfg.epochs = e.clone();
        }
        if let Some(b) = t.batch {
            cfg.batch_size = b;
        }
        if let Some(lr) = t.lr {
            cfg.learning_rate = lr;
        }
        if t.no_self_loops {
            cfg.self_loops = false;
        }
    }
    Ok(cfg)
}

pub fn apply_controller(cfg: &mut RunConfig, args: &ControllerArgs) {
    let c = &mut cfg.controller;
    if let Some(k) = args.k {
        c.granularity = k;
    }
    if let Some(cap) = args.cap {
        c.max_epochs_per_layer = cap;
    }
    if let Some(i) = args.iterations {
        c.iterations = i;
    }
    if let Some(r) = args.rollouts {
        c.rollouts_per_iteration = r;
    }
    if let Some(h) = args.controller_hidden {
        c.hidden_dim = h;
    }
    if let Some(lr) = args.controller_lr {
        c.learning_rate = lr;
    }
    if let Some(p) = &args.load_policy {
        c.load_policy = Some(p.clone());
    }
}

pub fn apply_probe(cfg: &mut RunConfig, args: &ProbeArgs, seed_flag: Option<u64>) {
    let p = &mut cfg.probe;
    if let Some(List(d)) = &args.depths {
        p.depths = d.clone();
    }
    if let Some(n) = args.pairs {
        p.num_pairs = n;
    }
    match (&args.seeds, seed_flag) {
        (Some(List(s)), _) => p.seeds = s.clone(),
        (None, Some(s)) => p.seeds = vec![s],
        _ => {}
    }
    if let Some(e) = args.probe_epochs {
        p.epochs = e;
    }
    if args.untrained {
        p.train = false;
    }
}
