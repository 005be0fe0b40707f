//! Empirical expressiveness probe: 1-WL refinement, rooted subtrees, and a
//! Monte-Carlo estimate of how often a model separates non-isomorphic graphs.

mod capacity;
mod sampler;
mod wl;

use thiserror::Error;

use crate::graph::GraphError;
use crate::train::TrainError;

pub use capacity::{
    capacity_vs_depth, degree_features, distinguished_flags, embeddings_differ, estimate_capacity, forest_dataset,
    mean_with_std_error, model_embedding, read_capacity_csv, sorted_readout, wl_flags, write_capacity_csv,
    CapacityConfig, CapacityEstimate, CapacityRow, DepthRun,
};
pub use sampler::{
    are_isomorphic, certify_non_isomorphic, sample_template, Certificate, GraphPair, PairSampler, TemplateFamily,
};
pub use wl::{rooted_subtree, wl_distinguish, wl_refine, wl_refine_joint, ColorHistogram, RootedSubgraph};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("node {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("pair sampler found no certified non-isomorphic pair in {attempts} attempts")]
    SamplerExhausted { attempts: usize },
    #[error("invalid probe configuration: {0}")]
    Config(String),
    #[error("artifact {path}: {msg}")]
    Artifact { path: std::path::PathBuf, msg: String },
}

impl From<crate::tensor::TensorError> for ProbeError {
    fn from(e: crate::tensor::TensorError) -> Self {
        ProbeError::Train(e.into())
    }
}
