//! Learned per-layer stopping controller.
//!
//! A small recurrent policy is consulted every `k` epochs of layer-wise
//! training and chooses between continuing and stopping the current layer.
//! Policies are trained with REINFORCE on a reward that trades final training
//! loss against total epochs.

mod policy;
mod search;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Rng;
use crate::tensor::TensorError;
use crate::train::TrainError;

pub use policy::{load_policy, save_policy, ControllerPolicy, PolicyParams, StepInput, StepOutput, POLICY_VERSION};
pub use search::{
    reinforce_update, rollout, search, RewardRecord, RolloutConfig, RolloutResult, SearchConfig, SearchResult,
    StepRecord, Trajectory, UpdateReport,
};

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("non-finite controller input: {0}")]
    NonFinite(&'static str),
    #[error("layer index {index} out of range for {num_layers} layers")]
    LayerOutOfRange { index: usize, num_layers: usize },
    #[error("trajectory batch is empty")]
    EmptyBatch,
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt policy file {path}: {msg}")]
    Corrupt { path: std::path::PathBuf, msg: String },
    #[error("policy file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Continue,
    Stop,
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Continue => 0,
            Action::Stop => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    /// Stop with probability `ρ` (exploration during search).
    Sample,
    /// Stop iff `ρ` exceeds the policy's threshold (deployment).
    Threshold,
}

/// Picks an action from the stop probability.
pub fn decide(rho: f64, mode: DecisionMode, threshold: f64, rng: &mut Rng) -> Action {
    let stop = match mode {
        DecisionMode::Sample => rng.random::<f64>() < rho,
        DecisionMode::Threshold => rho > threshold,
    };
    if stop {
        Action::Stop
    } else {
        Action::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub loss_weight: f64,
    pub epoch_weight: f64,
    pub baseline_decay: f64,
    /// Subtract a moving-average baseline from rewards; plain REINFORCE
    /// when false.
    pub use_baseline: bool,
}

impl RewardConfig {
    /// Loss weight 1 and epoch weight `1 / (num_layers · max_epochs_per_layer)`,
    /// so both terms are of order one.
    pub fn for_budget(num_layers: usize, max_epochs_per_layer: usize) -> Self {
        Self {
            loss_weight: 1.0,
            epoch_weight: 1.0 / (num_layers * max_epochs_per_layer).max(1) as f64,
            baseline_decay: 0.9,
            use_baseline: true,
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let ok_weight = |w: f64| w >= 0.0 && w.is_finite();
        if !ok_weight(self.loss_weight) || !ok_weight(self.epoch_weight) {
            return Err(ControllerError::Config(
                "reward weights must be finite and nonnegative".into(),
            ));
        }
        if self.loss_weight == 0.0 && self.epoch_weight == 0.0 {
            return Err(ControllerError::Config("reward weights cannot both be zero".into()));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(ControllerError::Config(format!(
                "baseline_decay {} must lie in [0, 1)",
                self.baseline_decay
            )));
        }
        Ok(())
    }
}

/// `R̂ = −(λ₁·final_loss + λ₂·total_epochs)`; larger is better.
pub fn compute_reward(final_loss: f64, total_epochs: usize, cfg: &RewardConfig) -> f64 {
    -(cfg.loss_weight * final_loss + cfg.epoch_weight * total_epochs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn reward_examples() {
        let cfg = RewardConfig {
            loss_weight: 1.0,
            epoch_weight: 0.001,
            baseline_decay: 0.9,
            use_baseline: true,
        };
        assert!((compute_reward(0.5, 100, &cfg) + 0.6).abs() < 1e-15);
        let loss_only = RewardConfig {
            epoch_weight: 0.0,
            ..cfg
        };
        assert_eq!(
            compute_reward(0.5, 10, &loss_only),
            compute_reward(0.5, 1000, &loss_only)
        );
        assert!(compute_reward(0.5, 11, &cfg) < compute_reward(0.5, 10, &cfg));
    }

    #[test]
    fn reward_config_validation() {
        let mut cfg = RewardConfig::for_budget(2, 100);
        assert!((cfg.epoch_weight - 0.005).abs() < 1e-15);
        assert!(cfg.validate().is_ok());
        cfg.loss_weight = 0.0;
        cfg.epoch_weight = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decide_degenerate_and_threshold() {
        let mut rng = seeded(1, 0);
        for _ in 0..100 {
            assert_eq!(decide(1.0, DecisionMode::Sample, 0.5, &mut rng), Action::Stop);
            assert_eq!(decide(0.0, DecisionMode::Sample, 0.5, &mut rng), Action::Continue);
        }
        assert_eq!(decide(0.4, DecisionMode::Threshold, 0.5, &mut rng), Action::Continue);
        assert_eq!(decide(0.6, DecisionMode::Threshold, 0.5, &mut rng), Action::Stop);
    }
}
