#![allow(dead_code)]

use l2gcn::graph::{build_csr, CsrMatrix, GraphDataset, Labels, Masks};
use l2gcn::rng::{seeded, Rng};
use l2gcn::tensor::DenseMatrix;
use rand::Rng as _;

pub fn rng(seed: u64) -> Rng {
    seeded(seed, 0xbeef)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut Rng) -> CsrMatrix {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    build_csr(&edges, n).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_perm(n: usize, rng: &mut Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Small random single-label dataset with every node in some split.
pub fn small_dataset(n: usize, feature_dim: usize, classes: usize, seed: u64) -> GraphDataset {
    let mut r = rng(seed);
    let adjacency = random_graph(n, 0.3, &mut r);
    let features = random_matrix(n, feature_dim, &mut r);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut masks = Masks::default();
    for i in 0..n {
        match i % 5 {
            0..=2 => masks.train.push(i),
            3 => masks.val.push(i),
            _ => masks.test.push(i),
        }
    }
    GraphDataset::new(adjacency, features, Labels::Single(labels), masks, classes).unwrap()
}

/// Relative error used by the finite-difference checks.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}
