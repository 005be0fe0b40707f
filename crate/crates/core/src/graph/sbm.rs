use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{build_csr, GraphDataset, GraphError, Labels, Masks};
use crate::rng::{seeded, streams};
use crate::tensor::DenseMatrix;

/// Stochastic block model parameters. Node labels are block indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub intra_prob: f64,
    pub inter_prob: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub seed: u64,
}

impl SbmParams {
    /// `blocks` blocks of (nearly) equal size summing to `num_nodes`.
    pub fn balanced(num_nodes: usize, blocks: usize) -> Vec<usize> {
        (0..blocks)
            .map(|b| num_nodes / blocks + usize::from(b < num_nodes % blocks))
            .collect()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidParams(m));
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad("block_sizes must be nonempty with positive sizes".into());
        }
        for (name, p) in [("intra_prob", self.intra_prob), ("inter_prob", self.inter_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.block_sizes.len() > 1 && self.intra_prob <= self.inter_prob {
            return bad(format!(
                "intra_prob ({}) must exceed inter_prob ({})",
                self.intra_prob, self.inter_prob
            ));
        }
        if self.feature_dim < self.block_sizes.len() {
            return bad(format!(
                "feature_dim {} is smaller than the {} blocks",
                self.feature_dim,
                self.block_sizes.len()
            ));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return bad(format!("feature_noise {} invalid", self.feature_noise));
        }
        Ok(())
    }
}

/// Samples an SBM node-classification dataset.
///
/// Features are the one-hot block indicator plus i.i.d. Gaussian noise; masks
/// split every block 60/20/20 after a seeded shuffle. Identical parameters give
/// identical datasets.
pub fn generate_sbm(params: &SbmParams) -> Result<GraphDataset, GraphError> {
    params.validate()?;
    let block_of: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = block_of.len();

    let mut rng = seeded(params.seed, streams::SBM_EDGES);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block_of[u] == block_of[v] {
                params.intra_prob
            } else {
                params.inter_prob
            };
            // p = 1 must always connect and p = 0 never, whatever the draw
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let adjacency = build_csr(&edges, n)?;

    let mut rng = seeded(params.seed, streams::SBM_FEATURES);
    let noise = Normal::new(0.0, params.feature_noise).map_err(|e| GraphError::InvalidParams(e.to_string()))?;
    let mut features = DenseMatrix::zeros(n, params.feature_dim);
    for (i, &b) in block_of.iter().enumerate() {
        let row = features.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            let base = if j == b { 1.0 } else { 0.0 };
            *x = base + noise.sample(&mut rng);
        }
    }

    let mut rng = seeded(params.seed, streams::SBM_MASKS);
    let mut masks = Masks::default();
    let mut start = 0;
    for &size in &params.block_sizes {
        let mut members: Vec<usize> = (start..start + size).collect();
        members.shuffle(&mut rng);
        let n_train = (0.6 * size as f64).round() as usize;
        let n_val = ((0.2 * size as f64).round() as usize).min(size - n_train);
        masks.train.extend_from_slice(&members[..n_train]);
        masks.val.extend_from_slice(&members[n_train..n_train + n_val]);
        masks.test.extend_from_slice(&members[n_train + n_val..]);
        start += size;
    }

    GraphDataset::new(
        adjacency,
        features,
        Labels::Single(block_of),
        masks,
        params.block_sizes.len(),
    )
}
