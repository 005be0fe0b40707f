use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{sample_template, wl_distinguish, GraphPair, PairSampler, ProbeError, TemplateFamily};
use crate::graph::{build_csr, normalize_adjacency, CsrMatrix, GraphDataset, Labels, Masks, Split};
use crate::ledger::CostLedger;
use crate::rng::{seeded, streams};
use crate::tensor::DenseMatrix;
use crate::train::{evaluate, train_layerwise, LayerTrainConfig, LayerwiseModel, LossKind, TrainingData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub estimate: f64,
    pub num_pairs: usize,
    pub distinguished: usize,
    pub std_error: f64,
}

impl CapacityEstimate {
    pub fn from_counts(distinguished: usize, num_pairs: usize) -> Self {
        let p = if num_pairs == 0 {
            0.0
        } else {
            distinguished as f64 / num_pairs as f64
        };
        let std_error = if num_pairs == 0 {
            0.0
        } else {
            (p * (1.0 - p) / num_pairs as f64).sqrt()
        };
        Self {
            estimate: p,
            num_pairs,
            distinguished,
            std_error,
        }
    }

    pub fn from_flags(flags: &[bool]) -> Self {
        Self::from_counts(flags.iter().filter(|&&f| f).count(), flags.len())
    }
}

/// One-hot degree features, degrees above `dim - 1` clamped to the last column.
pub fn degree_features(graph: &CsrMatrix, dim: usize) -> DenseMatrix<f64> {
    let mut f = DenseMatrix::zeros(graph.n(), dim);
    for v in 0..graph.n() {
        f.set(v, graph.row_nnz(v).min(dim - 1), 1.0);
    }
    f
}

/// Sort-then-concatenate readout: rows ordered lexicographically (after
/// quantizing to ~1e-7 of the largest magnitude, so rounding noise cannot
/// reorder equal rows), flattened, and zero-padded to `pad_rows` rows.
pub fn sorted_readout(embeddings: &DenseMatrix<f64>, pad_rows: usize) -> Vec<f64> {
    let scale = embeddings.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let q = if scale > 0.0 { scale * 1e-7 } else { 1.0 };
    let key = |r: usize| -> Vec<i64> { embeddings.row(r).iter().map(|v| (v / q).round() as i64).collect() };
    let mut order: Vec<(Vec<i64>, usize)> = (0..embeddings.rows()).map(|r| (key(r), r)).collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = Vec::with_capacity(pad_rows.max(embeddings.rows()) * embeddings.cols());
    for (_, r) in &order {
        out.extend_from_slice(embeddings.row(*r));
    }
    out.resize(pad_rows.max(embeddings.rows()) * embeddings.cols(), 0.0);
    out
}

/// Graph embedding of a trained model: degree features, full-depth node
/// embeddings, sorted readout padded to `pad_rows`.
pub fn model_embedding(
    model: &LayerwiseModel<f64>,
    graph: &CsrMatrix,
    pad_rows: usize,
) -> Result<Vec<f64>, ProbeError> {
    let a_hat = normalize_adjacency(graph, true)?;
    let feats = degree_features(graph, model.input_dim());
    let h = model.embed(&a_hat, &feats, model.depth(), &mut CostLedger::new())?;
    Ok(sorted_readout(&h, pad_rows))
}

/// Max-norm difference after scaling both vectors by their joint max-norm.
pub fn embeddings_differ(v1: &[f64], v2: &[f64], tolerance: f64) -> bool {
    if v1.len() != v2.len() {
        return true;
    }
    let scale = v1.iter().chain(v2).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    v1.iter().zip(v2).any(|(a, b)| (a - b).abs() / scale > tolerance)
}

/// Which pairs `embed` maps to different embeddings.
pub fn distinguished_flags<F>(mut embed: F, pairs: &[GraphPair], tolerance: f64) -> Result<Vec<bool>, ProbeError>
where
    F: FnMut(&CsrMatrix) -> Result<Vec<f64>, ProbeError>,
{
    pairs
        .iter()
        .map(|p| Ok(embeddings_differ(&embed(&p.first)?, &embed(&p.second)?, tolerance)))
        .collect()
}

/// Which pairs 1-WL separates within `rounds` rounds.
pub fn wl_flags(pairs: &[GraphPair], rounds: usize) -> Vec<bool> {
    pairs
        .iter()
        .map(|p| wl_distinguish(&p.first, &p.second, rounds))
        .collect()
}

/// Monte-Carlo capacity: the fraction of `num_pairs` sampled non-isomorphic
/// pairs that `embed` separates.
pub fn estimate_capacity<F>(
    embed: F,
    sampler: &mut PairSampler,
    num_pairs: usize,
    tolerance: f64,
) -> Result<CapacityEstimate, ProbeError>
where
    F: FnMut(&CsrMatrix) -> Result<Vec<f64>, ProbeError>,
{
    let pairs = sampler.take_pairs(num_pairs)?;
    Ok(CapacityEstimate::from_flags(&distinguished_flags(
        embed, &pairs, tolerance,
    )?))
}

/// Node-classification dataset made of template graphs: a disjoint union of
/// `graphs_per_family` graphs of every family, each node labeled with its
/// graph's family, degree one-hot features, 60/20/20 per-class split.
pub fn forest_dataset(
    graphs_per_family: usize,
    min_nodes: usize,
    max_nodes: usize,
    feature_dim: usize,
    seed: u64,
) -> Result<GraphDataset, ProbeError> {
    if min_nodes < 3 || min_nodes > max_nodes || graphs_per_family == 0 || feature_dim == 0 {
        return Err(ProbeError::Config("invalid forest parameters".into()));
    }
    let mut rng = seeded(seed, streams::PROBE_FOREST);
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    let mut by_class = vec![Vec::new(); TemplateFamily::ALL.len()];
    for family in TemplateFamily::ALL {
        for _ in 0..graphs_per_family {
            let n = rng.random_range(min_nodes..=max_nodes);
            let g = sample_template(family, n, &mut rng);
            let off = labels.len();
            edges.extend(g.upper_edges().into_iter().map(|(u, v)| (u + off, v + off)));
            by_class[family.index()].extend(off..off + n);
            labels.extend(std::iter::repeat_n(family.index(), n));
        }
    }
    let adjacency = build_csr(&edges, labels.len())?;
    let features = degree_features(&adjacency, feature_dim);
    let mut masks = Masks::default();
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let size = members.len();
        let n_train = (0.6 * size as f64).round() as usize;
        let n_val = ((0.2 * size as f64).round() as usize).min(size - n_train);
        masks.train.extend_from_slice(&members[..n_train]);
        masks.val.extend_from_slice(&members[n_train..n_train + n_val]);
        masks.test.extend_from_slice(&members[n_train + n_val..]);
    }
    Ok(GraphDataset::new(
        adjacency,
        features,
        Labels::Single(labels),
        masks,
        TemplateFamily::ALL.len(),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub depths: Vec<usize>,
    pub num_pairs: usize,
    pub seeds: Vec<u64>,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub feature_dim: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub graphs_per_family: usize,
    pub tolerance: f64,
    /// Train the models on the forest dataset; otherwise use their
    /// random initialization.
    pub train: bool,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            depths: vec![1, 2, 3],
            num_pairs: 200,
            seeds: vec![1, 2, 3, 4, 5],
            hidden_dim: 16,
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.01,
            feature_dim: 8,
            min_nodes: 6,
            max_nodes: 12,
            graphs_per_family: 40,
            tolerance: 1e-6,
            train: true,
        }
    }
}

/// One line of `capacity.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub depth: usize,
    pub seed: u64,
    pub num_pairs: usize,
    pub distinguished: usize,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRun {
    pub row: CapacityRow,
    /// Per-pair outcomes, aligned with the seed's pair list.
    pub flags: Vec<bool>,
    /// Validation micro-F1 on the forest dataset (trained models only).
    pub val_micro_f1: Option<f64>,
}

/// Capacity estimates per (seed, depth): for each seed, samples one pair set
/// and one forest dataset, then trains (or initializes) a layer-wise model of
/// every depth and measures how many pairs it separates.
pub fn capacity_vs_depth(cfg: &CapacityConfig) -> Result<Vec<DepthRun>, ProbeError> {
    if cfg.depths.is_empty() || cfg.depths.contains(&0) || cfg.depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProbeError::Config(
            "depths must be positive and strictly ascending".into(),
        ));
    }
    if cfg.seeds.is_empty() || cfg.hidden_dim == 0 || cfg.feature_dim == 0 {
        return Err(ProbeError::Config(
            "seeds, hidden_dim and feature_dim must be nonempty/positive".into(),
        ));
    }
    let mut runs = Vec::with_capacity(cfg.seeds.len() * cfg.depths.len());
    for &seed in &cfg.seeds {
        let pairs = PairSampler::new(seed, cfg.min_nodes, cfg.max_nodes)?.take_pairs(cfg.num_pairs)?;
        let data: Option<TrainingData<f64>> = if cfg.train {
            let ds = forest_dataset(
                cfg.graphs_per_family,
                cfg.min_nodes,
                cfg.max_nodes,
                cfg.feature_dim,
                seed,
            )?;
            Some(TrainingData::new(&ds, true)?)
        } else {
            None
        };
        for &depth in &cfg.depths {
            let hidden = vec![cfg.hidden_dim; depth];
            let (model, val_micro_f1) = match &data {
                Some(data) => {
                    let layers = LayerTrainConfig::schedule(
                        &hidden,
                        &vec![cfg.epochs; depth],
                        cfg.batch_size,
                        cfg.learning_rate,
                        seed,
                        LossKind::Softmax,
                    )?;
                    let out = train_layerwise(data, &layers, None)?;
                    let f1 = evaluate(&out.model, data, Split::Val)?.micro_f1;
                    (out.model, Some(f1))
                }
                None => (
                    LayerwiseModel::random(cfg.feature_dim, &hidden, TemplateFamily::ALL.len(), seed)?,
                    None,
                ),
            };
            let flags = distinguished_flags(|g| model_embedding(&model, g, cfg.max_nodes), &pairs, cfg.tolerance)?;
            let est = CapacityEstimate::from_flags(&flags);
            runs.push(DepthRun {
                row: CapacityRow {
                    depth,
                    seed,
                    num_pairs: est.num_pairs,
                    distinguished: est.distinguished,
                    estimate: est.estimate,
                    std_error: est.std_error,
                },
                flags,
                val_micro_f1,
            });
        }
    }
    Ok(runs)
}

/// Mean estimate over seeds and its standard error `sqrt(Σ se²) / n`.
pub fn mean_with_std_error(rows: &[&CapacityRow]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.estimate).sum::<f64>() / n;
    let se = rows.iter().map(|r| r.std_error * r.std_error).sum::<f64>().sqrt() / n;
    (mean, se)
}

fn csv_err(path: &Path, e: csv::Error) -> ProbeError {
    ProbeError::Artifact {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

pub fn write_capacity_csv(path: &Path, rows: &[CapacityRow]) -> Result<(), ProbeError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e.into()))
}

pub fn read_capacity_csv(path: &Path) -> Result<Vec<CapacityRow>, ProbeError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}
