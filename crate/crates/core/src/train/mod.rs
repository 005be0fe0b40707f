//! Trainers: layer-wise (one aggregation per layer), conventional full-batch,
//! and the neighborhood-expanding mini-batch baseline.

mod artifacts;
mod eval;
mod fullbatch;
mod layerwise;
mod model;
mod vanilla;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalize_adjacency, GraphDataset, GraphError, Labels, Masks, NormalizedAdjacency, Split};
use crate::tensor::{gather_rows, sigmoid_bce, softmax_cross_entropy, DenseMatrix, LossOutput, Scalar, TensorError};

pub use artifacts::{read_loss_curve, write_loss_curve, EvalSummary, RunMetrics};
pub use eval::{evaluate, multi_label_f1, single_label_f1, EvalReport};
pub use fullbatch::{fullbatch_objective, train_conventional_fullbatch, FullbatchGradients};
pub use layerwise::{layer_objective, train_layerwise, LayerGradients};
pub use model::{infer_embeddings, LayerwiseModel};
pub use vanilla::{gather_neighborhoods, train_vanilla_minibatch};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("train mask is empty")]
    EmptyTrainMask,
    #[error("{0:?} split is empty")]
    EmptySplit(Split),
    #[error("layer {layer}: expected input dimension {expected}, found {found}")]
    DimensionChain {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {requested} requested but model depth is {depth}")]
    LayerOutOfRange { requested: usize, depth: usize },
    #[error("loss {loss:?} does not match {kind} labels")]
    LossKindMismatch { loss: LossKind, kind: &'static str },
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {msg}")]
    Artifact { path: std::path::PathBuf, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Softmax,
    Bce,
}

impl LossKind {
    pub fn for_labels(labels: &Labels) -> Self {
        if labels.is_multi() {
            LossKind::Bce
        } else {
            LossKind::Softmax
        }
    }
}

/// Settings for one layer of layer-wise training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrainConfig {
    pub hidden_dim: usize,
    /// Epoch budget; a stop hook may end the layer earlier.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub loss_kind: LossKind,
}

impl LayerTrainConfig {
    /// Uniform per-layer configs for the given epoch schedule.
    pub fn schedule(
        hidden_dims: &[usize],
        epochs: &[usize],
        batch_size: usize,
        learning_rate: f64,
        seed: u64,
        loss_kind: LossKind,
    ) -> Result<Vec<Self>, TrainError> {
        if hidden_dims.len() != epochs.len() {
            return Err(TrainError::Config(format!(
                "schedule has {} entries but depth is {}",
                epochs.len(),
                hidden_dims.len()
            )));
        }
        Ok(hidden_dims
            .iter()
            .zip(epochs)
            .map(|(&hidden_dim, &epochs)| Self {
                hidden_dim,
                epochs,
                batch_size,
                learning_rate,
                seed,
                loss_kind,
            })
            .collect())
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(TrainError::Config("hidden_dim must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Settings for the jointly trained baselines (full-batch and mini-batch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTrainConfig {
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    /// Ignored by the full-batch trainer.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub loss_kind: LossKind,
}

impl JointTrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(TrainError::Config(
                "hidden_dims must be nonempty with positive widths".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Supervision targets in the trainer's precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T: Scalar> {
    Single(Vec<usize>),
    Multi(DenseMatrix<T>),
}

impl<T: Scalar> Targets<T> {
    pub fn from_labels(labels: &Labels, class_count: usize) -> Self {
        match labels {
            Labels::Single(v) => Targets::Single(v.clone()),
            Labels::Multi(rows) => Targets::Multi(DenseMatrix::from_fn(rows.len(), class_count, |i, j| {
                if rows[i][j] {
                    T::one()
                } else {
                    T::zero()
                }
            })),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Single(v) => v.len(),
            Targets::Multi(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self, TensorError> {
        Ok(match self {
            Targets::Single(v) => Targets::Single(rows.iter().map(|&r| v[r]).collect()),
            Targets::Multi(m) => Targets::Multi(gather_rows(m, rows)?),
        })
    }

    pub fn loss(&self, logits: &DenseMatrix<T>, kind: LossKind) -> Result<LossOutput<T>, TrainError> {
        match (self, kind) {
            (Targets::Single(labels), LossKind::Softmax) => Ok(softmax_cross_entropy(logits, labels, None)?),
            (Targets::Multi(t), LossKind::Bce) => Ok(sigmoid_bce(logits, t)?),
            (Targets::Single(_), loss) => Err(TrainError::LossKindMismatch { loss, kind: "single" }),
            (Targets::Multi(_), loss) => Err(TrainError::LossKindMismatch { loss, kind: "multi" }),
        }
    }
}

/// A dataset prepared for training: normalized adjacency plus features and
/// targets cast to the training precision.
#[derive(Debug, Clone)]
pub struct TrainingData<T: Scalar> {
    pub a_hat: NormalizedAdjacency,
    pub features: DenseMatrix<T>,
    pub targets: Targets<T>,
    pub labels: Labels,
    pub masks: Masks,
    pub class_count: usize,
}

impl<T: Scalar> TrainingData<T> {
    pub fn new(dataset: &GraphDataset, add_self_loops: bool) -> Result<Self, TrainError> {
        Ok(Self {
            a_hat: normalize_adjacency(dataset.adjacency(), add_self_loops)?,
            features: dataset.features().cast(),
            targets: Targets::from_labels(dataset.labels(), dataset.class_count()),
            labels: dataset.labels().clone(),
            masks: dataset.masks().clone(),
            class_count: dataset.class_count(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    fn check_loss_kind(&self, kind: LossKind) -> Result<(), TrainError> {
        if kind != LossKind::for_labels(&self.labels) {
            let label_kind = if self.labels.is_multi() { "multi" } else { "single" };
            return Err(TrainError::LossKindMismatch {
                loss: kind,
                kind: label_kind,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookDecision {
    Continue,
    Stop,
}

/// What a stop hook sees after each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub layer: usize,
    pub num_layers: usize,
    /// 1-based epoch index within the layer.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: Option<f64>,
}

/// Per-epoch callback; may end the current layer early.
pub trait EpochHook {
    fn wants_val_f1(&self) -> bool {
        false
    }

    fn after_epoch(&mut self, report: &EpochReport) -> HookDecision;
}

impl<F: FnMut(&EpochReport) -> HookDecision> EpochHook for F {
    fn after_epoch(&mut self, report: &EpochReport) -> HookDecision {
        self(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// `None` for jointly trained models.
    pub layer: Option<usize>,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    pub model: LayerwiseModel<T>,
    pub history: Vec<EpochRecord>,
    pub ledger: crate::ledger::CostLedger,
    /// Epochs actually run per layer (a single entry for joint trainers).
    pub epochs_per_layer: Vec<usize>,
}

fn ensure_train_mask<T: Scalar>(data: &TrainingData<T>) -> Result<(), TrainError> {
    if data.masks.train.is_empty() {
        return Err(TrainError::EmptyTrainMask);
    }
    Ok(())
}
