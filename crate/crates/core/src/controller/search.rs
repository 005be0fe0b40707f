use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    compute_reward, decide, Action, ControllerError, ControllerPolicy, DecisionMode, PolicyParams, RewardConfig,
    StepInput,
};
use crate::rng::{seeded, streams, Rng};
use crate::tensor::Scalar;
use crate::train::{
    train_layerwise, EpochHook, EpochReport, HookDecision, LayerTrainConfig, TrainOutcome, TrainingData,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    /// Per-layer training settings; each layer's `epochs` is replaced by the cap.
    pub layers: Vec<LayerTrainConfig>,
    pub max_epochs_per_layer: usize,
}

impl RolloutConfig {
    fn validate(&self, granularity: usize) -> Result<(), ControllerError> {
        if self.layers.is_empty() {
            return Err(ControllerError::Config("at least one layer is required".into()));
        }
        if self.max_epochs_per_layer == 0 || !self.max_epochs_per_layer.is_multiple_of(granularity) {
            return Err(ControllerError::Config(format!(
                "max_epochs_per_layer {} must be a positive multiple of the decision granularity {granularity}",
                self.max_epochs_per_layer
            )));
        }
        Ok(())
    }

    fn capped_layers(&self) -> Vec<LayerTrainConfig> {
        self.layers
            .iter()
            .map(|l| LayerTrainConfig {
                epochs: self.max_epochs_per_layer,
                ..l.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub layer: usize,
    /// Epoch (within the layer) at which the decision was taken.
    pub epoch: usize,
    pub input: Vec<f64>,
    pub action: Action,
    /// Probability the policy assigned to `action`.
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    /// Epochs trained per layer.
    pub schedule: Vec<usize>,
    pub final_loss: f64,
    pub total_epochs: usize,
    pub reward: f64,
}

impl Trajectory {
    fn inputs_and_actions(&self) -> (Vec<Vec<f64>>, Vec<Action>) {
        self.steps.iter().map(|s| (s.input.clone(), s.action)).unzip()
    }
}

#[derive(Debug, Clone)]
pub struct RolloutResult<T: Scalar> {
    pub trajectory: Trajectory,
    pub outcome: TrainOutcome<T>,
}

struct ControllerHook<'a> {
    policy: &'a ControllerPolicy,
    mode: DecisionMode,
    rng: &'a mut Rng,
    cap: usize,
    hidden: Vec<f64>,
    prev_action: Action,
    first_loss: Option<(usize, f64)>,
    steps: Vec<StepRecord>,
    error: Option<ControllerError>,
}

impl EpochHook for ControllerHook<'_> {
    fn after_epoch(&mut self, report: &EpochReport) -> HookDecision {
        if !report.epoch.is_multiple_of(self.policy.granularity) {
            return HookDecision::Continue;
        }
        let first = match self.first_loss {
            Some((layer, loss)) if layer == report.layer => loss,
            _ => {
                self.first_loss = Some((report.layer, report.train_loss));
                report.train_loss
            }
        };
        let loss_ratio = if first > 0.0 { report.train_loss / first } else { 1.0 };
        let input = StepInput {
            prev_action: self.prev_action,
            loss_ratio,
            layer_index: report.layer,
            num_layers: report.num_layers,
        };
        let out = match self
            .policy
            .input_vector(&input)
            .and_then(|x| self.policy.step(&self.hidden, &input).map(|o| (x, o)))
        {
            Ok(v) => v,
            Err(e) => {
                self.error = Some(e);
                return HookDecision::Stop;
            }
        };
        let (x, step) = out;
        let action = decide(step.rho, self.mode, self.policy.rho_threshold, self.rng);
        let prob = match action {
            Action::Stop => step.rho,
            Action::Continue => 1.0 - step.rho,
        };
        self.steps.push(StepRecord {
            layer: report.layer,
            epoch: report.epoch,
            input: x,
            action,
            prob,
        });
        self.hidden = step.hidden;
        self.prev_action = action;
        if action == Action::Stop || report.epoch >= self.cap {
            HookDecision::Stop
        } else {
            HookDecision::Continue
        }
    }
}

/// Layer-wise training driven by the controller: every `k` epochs the policy
/// decides whether the current layer stops. Layers that reach the cap stop
/// regardless.
pub fn rollout<T: Scalar>(
    policy: &ControllerPolicy,
    data: &TrainingData<T>,
    cfg: &RolloutConfig,
    mode: DecisionMode,
    rng: &mut Rng,
) -> Result<RolloutResult<T>, ControllerError> {
    cfg.validate(policy.granularity)?;
    let layers = cfg.capped_layers();
    let mut hook = ControllerHook {
        policy,
        mode,
        rng,
        cap: cfg.max_epochs_per_layer,
        hidden: policy.initial_hidden(),
        prev_action: Action::Continue,
        first_loss: None,
        steps: Vec::new(),
        error: None,
    };
    let outcome = train_layerwise(data, &layers, Some(&mut hook))?;
    if let Some(e) = hook.error {
        return Err(e);
    }
    let final_loss = outcome.history.last().map_or(f64::NAN, |r| r.train_loss);
    let total_epochs = outcome.epochs_per_layer.iter().sum();
    let trajectory = Trajectory {
        steps: hook.steps,
        schedule: outcome.epochs_per_layer.clone(),
        final_loss,
        total_epochs,
        reward: compute_reward(final_loss, total_epochs, &policy.reward),
    };
    Ok(RolloutResult { trajectory, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub mean_reward: f64,
    pub mean_advantage: f64,
    /// Baseline after the update (`None` when disabled).
    pub baseline: Option<f64>,
    /// False when every advantage was zero and the parameters were left alone.
    pub applied: bool,
}

/// One REINFORCE step on a batch of trajectories: ascends
/// `(1/n) Σ_i A_i Σ_t log π(a_t | s_t)` with `A_i = R̂_i − baseline`.
///
/// The baseline starts at the first batch's mean reward and then follows an
/// exponential moving average. A batch whose advantages are all zero leaves
/// the parameters and optimizer state untouched.
pub fn reinforce_update(
    policy: &mut ControllerPolicy,
    trajectories: &[Trajectory],
    cfg: &RewardConfig,
) -> Result<UpdateReport, ControllerError> {
    if trajectories.is_empty() {
        return Err(ControllerError::EmptyBatch);
    }
    cfg.validate()?;
    let n = trajectories.len() as f64;
    let mean_reward = trajectories.iter().map(|t| t.reward).sum::<f64>() / n;
    if !mean_reward.is_finite() {
        return Err(ControllerError::NonFinite("reward"));
    }
    let baseline = if cfg.use_baseline {
        Some(policy.baseline().unwrap_or(mean_reward))
    } else {
        None
    };
    let advantages: Vec<f64> = trajectories
        .iter()
        .map(|t| t.reward - baseline.unwrap_or(0.0))
        .collect();
    let mean_advantage = advantages.iter().sum::<f64>() / n;
    let applied = advantages.iter().any(|&a| a != 0.0);
    if applied {
        let mut grad = PolicyParams::zeros(policy.embed_dim() + 2, policy.hidden_dim());
        for (t, &adv) in trajectories.iter().zip(&advantages) {
            let (inputs, actions) = t.inputs_and_actions();
            // descend J = -(1/n) Σ A Σ log π
            policy.accumulate_log_prob_grad(&inputs, &actions, -adv / n, &mut grad);
        }
        policy.apply_gradient(&grad)?;
    }
    let new_baseline = baseline.map(|b| cfg.baseline_decay * b + (1.0 - cfg.baseline_decay) * mean_reward);
    policy.set_baseline(new_baseline);
    Ok(UpdateReport {
        mean_reward,
        mean_advantage,
        baseline: new_baseline,
        applied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub rollout: RolloutConfig,
    pub iterations: usize,
    pub rollouts_per_iteration: usize,
    /// Seeds the decision sampling; training seeds live in the layer configs.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_advantage: f64,
    pub baseline: Option<f64>,
    pub mean_total_epochs: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult<T: Scalar> {
    pub policy: ControllerPolicy,
    pub best: Trajectory,
    pub reward_history: Vec<RewardRecord>,
    /// Threshold-mode rollout of the final policy.
    pub deployed: RolloutResult<T>,
    pub search_time_secs: f64,
}

/// REINFORCE search: each iteration samples rollouts, updates the policy and
/// logs the mean reward. Finishes with one threshold-mode deployment.
pub fn search<T: Scalar>(
    data: &TrainingData<T>,
    mut policy: ControllerPolicy,
    cfg: &SearchConfig,
) -> Result<SearchResult<T>, ControllerError> {
    if cfg.iterations == 0 || cfg.rollouts_per_iteration == 0 {
        return Err(ControllerError::Config(
            "iterations and rollouts_per_iteration must be at least 1".into(),
        ));
    }
    let start = Instant::now();
    let mut best: Option<Trajectory> = None;
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let mut batch = Vec::with_capacity(cfg.rollouts_per_iteration);
        for j in 0..cfg.rollouts_per_iteration {
            let stream = streams::rollout((it * cfg.rollouts_per_iteration + j) as u64);
            let mut rng = seeded(cfg.seed, stream);
            let r = rollout(&policy, data, &cfg.rollout, DecisionMode::Sample, &mut rng)?;
            batch.push(r.trajectory);
        }
        for t in &batch {
            if best.as_ref().is_none_or(|b| t.reward > b.reward) {
                best = Some(t.clone());
            }
        }
        let reward_cfg = policy.reward;
        let report = reinforce_update(&mut policy, &batch, &reward_cfg)?;
        history.push(RewardRecord {
            iteration: it + 1,
            mean_reward: report.mean_reward,
            mean_advantage: report.mean_advantage,
            baseline: report.baseline,
            mean_total_epochs: batch.iter().map(|t| t.total_epochs as f64).sum::<f64>() / batch.len() as f64,
        });
    }
    let search_time_secs = start.elapsed().as_secs_f64();
    let mut rng = seeded(cfg.seed, streams::rollout(u64::from(u32::MAX)));
    let deployed = rollout(&policy, data, &cfg.rollout, DecisionMode::Threshold, &mut rng)?;
    Ok(SearchResult {
        policy,
        best: best.expect("at least one iteration"),
        reward_history: history,
        deployed,
        search_time_secs,
    })
}
