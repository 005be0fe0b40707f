use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TrainError, TrainingData};
use crate::graph::NormalizedAdjacency;
use crate::ledger::CostLedger;
use crate::rng::{seeded, streams};
use crate::tensor::{affine_relu_forward, linear_forward, spmm, xavier_init_with, DenseMatrix, Scalar};

/// Per-layer weights `W⁽¹⁾…W⁽ᴸ⁾` plus the final linear classifier `Θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LayerwiseModel<T: Scalar> {
    layer_weights: Vec<DenseMatrix<T>>,
    classifier: DenseMatrix<T>,
}

pub(crate) fn init_layer_weight<T: Scalar>(d_in: usize, d_out: usize, seed: u64, layer: usize) -> DenseMatrix<T> {
    xavier_init_with(d_in, d_out, &mut seeded(seed, streams::layer_weight(layer)))
}

pub(crate) fn init_classifier<T: Scalar>(d_in: usize, classes: usize, seed: u64, layer: usize) -> DenseMatrix<T> {
    xavier_init_with(d_in, classes, &mut seeded(seed, streams::classifier(layer)))
}

impl<T: Scalar> LayerwiseModel<T> {
    pub fn new(layer_weights: Vec<DenseMatrix<T>>, classifier: DenseMatrix<T>) -> Result<Self, TrainError> {
        if layer_weights.is_empty() {
            return Err(TrainError::Config("model needs at least one layer".into()));
        }
        for (l, pair) in layer_weights.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(TrainError::DimensionChain {
                    layer: l + 1,
                    expected: pair[0].cols(),
                    found: pair[1].rows(),
                });
            }
        }
        let last = layer_weights[layer_weights.len() - 1].cols();
        if classifier.rows() != last {
            return Err(TrainError::DimensionChain {
                layer: layer_weights.len(),
                expected: last,
                found: classifier.rows(),
            });
        }
        Ok(Self {
            layer_weights,
            classifier,
        })
    }

    /// Freshly initialized (untrained) model; the same seed yields the same
    /// initial weights the trainers start from.
    pub fn random(input_dim: usize, hidden_dims: &[usize], class_count: usize, seed: u64) -> Result<Self, TrainError> {
        if hidden_dims.is_empty() {
            return Err(TrainError::Config("model needs at least one layer".into()));
        }
        let mut d_in = input_dim;
        let mut weights = Vec::with_capacity(hidden_dims.len());
        for (l, &h) in hidden_dims.iter().enumerate() {
            weights.push(init_layer_weight(d_in, h, seed, l));
            d_in = h;
        }
        let classifier = init_classifier(d_in, class_count, seed, hidden_dims.len() - 1);
        Self::new(weights, classifier)
    }

    pub fn depth(&self) -> usize {
        self.layer_weights.len()
    }

    pub fn layer_weights(&self) -> &[DenseMatrix<T>] {
        &self.layer_weights
    }

    pub(crate) fn layer_weights_mut(&mut self) -> &mut [DenseMatrix<T>] {
        &mut self.layer_weights
    }

    pub fn classifier(&self) -> &DenseMatrix<T> {
        &self.classifier
    }

    pub(crate) fn classifier_mut(&mut self) -> &mut DenseMatrix<T> {
        &mut self.classifier
    }

    pub fn input_dim(&self) -> usize {
        self.layer_weights[0].rows()
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layer_weights.iter().map(DenseMatrix::cols).collect()
    }

    pub fn class_count(&self) -> usize {
        self.classifier.cols()
    }

    /// `X⁽ˡ⁾` for every node of an arbitrary graph, by `up_to_layer`
    /// alternating aggregation / transformation passes.
    pub fn embed(
        &self,
        a_hat: &NormalizedAdjacency,
        features: &DenseMatrix<T>,
        up_to_layer: usize,
        ledger: &mut CostLedger,
    ) -> Result<DenseMatrix<T>, TrainError> {
        if up_to_layer > self.depth() {
            return Err(TrainError::LayerOutOfRange {
                requested: up_to_layer,
                depth: self.depth(),
            });
        }
        if features.cols() != self.input_dim() {
            return Err(TrainError::DimensionChain {
                layer: 0,
                expected: self.input_dim(),
                found: features.cols(),
            });
        }
        let mut x = features.clone();
        for w in &self.layer_weights[..up_to_layer] {
            let x_hat = spmm(a_hat, &x, ledger)?;
            let out = affine_relu_forward(&x_hat, w, ledger)?;
            ledger.free_matrix(&x_hat);
            ledger.free_matrix(&out.pre_activation);
            x = out.hidden;
        }
        Ok(x)
    }

    /// Classifier logits for every node.
    pub fn logits(
        &self,
        a_hat: &NormalizedAdjacency,
        features: &DenseMatrix<T>,
        ledger: &mut CostLedger,
    ) -> Result<DenseMatrix<T>, TrainError> {
        let h = self.embed(a_hat, features, self.depth(), ledger)?;
        Ok(linear_forward(&h, &self.classifier, ledger)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), TrainError> {
        let text = serde_json::to_string(self).map_err(|e| TrainError::Artifact {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: Self = serde_json::from_str(&text).map_err(|e| TrainError::Artifact {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        Self::new(raw.layer_weights, raw.classifier)
    }
}

/// `X⁽ˡ⁾` of the training graph.
pub fn infer_embeddings<T: Scalar>(
    model: &LayerwiseModel<T>,
    data: &TrainingData<T>,
    up_to_layer: usize,
) -> Result<DenseMatrix<T>, TrainError> {
    model.embed(&data.a_hat, &data.features, up_to_layer, &mut CostLedger::new())
}
