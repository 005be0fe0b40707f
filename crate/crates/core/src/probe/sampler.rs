use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{wl_distinguish, ProbeError};
use crate::graph::{build_csr, CsrMatrix};
use crate::rng::{seeded, streams, Rng};

/// Small graph families the probe draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateFamily {
    /// Random recursive tree.
    Tree,
    /// Disjoint union of cycles, each of length ≥ 3.
    Cycles,
    /// Two-block stochastic block model.
    Sbm,
}

impl TemplateFamily {
    pub const ALL: [TemplateFamily; 3] = [TemplateFamily::Tree, TemplateFamily::Cycles, TemplateFamily::Sbm];

    pub fn index(self) -> usize {
        match self {
            TemplateFamily::Tree => 0,
            TemplateFamily::Cycles => 1,
            TemplateFamily::Sbm => 2,
        }
    }
}

pub fn sample_template(family: TemplateFamily, num_nodes: usize, rng: &mut Rng) -> CsrMatrix {
    let n = num_nodes;
    let mut edges = Vec::new();
    match family {
        TemplateFamily::Tree => {
            for v in 1..n {
                edges.push((rng.random_range(0..v), v));
            }
        }
        TemplateFamily::Cycles if n < 3 => {
            edges.extend((1..n).map(|v| (v - 1, v)));
        }
        TemplateFamily::Cycles => {
            let mut start = 0;
            while start < n {
                let left = n - start;
                let mut len = if left < 6 { left } else { rng.random_range(3..=left) };
                if left - len < 3 {
                    len = left;
                }
                for i in 0..len {
                    let (a, b) = (start + i, start + (i + 1) % len);
                    edges.push((a.min(b), a.max(b)));
                }
                start += len;
            }
        }
        TemplateFamily::Sbm => {
            let half = n / 2;
            for u in 0..n {
                for v in u + 1..n {
                    let p = if (u < half) == (v < half) { 0.7 } else { 0.15 };
                    if rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
        }
    }
    build_csr(&edges, n).expect("template edges are valid")
}

fn sorted_degrees(g: &CsrMatrix) -> Vec<usize> {
    let mut d: Vec<usize> = (0..g.n()).map(|v| g.row_nnz(v)).collect();
    d.sort_unstable();
    d
}

/// Exact isomorphism test by backtracking over degree-compatible mappings.
/// Exponential in the worst case; meant for graphs of a handful of nodes.
pub fn are_isomorphic(g1: &CsrMatrix, g2: &CsrMatrix) -> bool {
    if g1.n() != g2.n() || g1.nnz() != g2.nnz() || sorted_degrees(g1) != sorted_degrees(g2) {
        return false;
    }
    let n = g1.n();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(v: usize, g1: &CsrMatrix, g2: &CsrMatrix, map: &mut [usize], used: &mut [bool]) -> bool {
        if v == g1.n() {
            return true;
        }
        for w in 0..g2.n() {
            if used[w] || g1.row_nnz(v) != g2.row_nnz(w) {
                continue;
            }
            let consistent = (0..v).all(|u| g1.contains(u, v) == g2.contains(map[u], w));
            if consistent {
                map[v] = w;
                used[w] = true;
                if extend(v + 1, g1, g2, map, used) {
                    return true;
                }
                used[w] = false;
            }
        }
        false
    }
    extend(0, g1, g2, &mut map, &mut used)
}

/// How a pair was shown to be non-isomorphic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    /// Node count, edge count or degree sequence differ.
    Invariant,
    /// Exhaustive search found no isomorphism.
    Exhaustive,
    /// 1-WL tells them apart.
    Wl,
}

/// `Some(certificate)` when the pair is provably non-isomorphic with the
/// checks available at its size.
pub fn certify_non_isomorphic(g1: &CsrMatrix, g2: &CsrMatrix) -> Option<Certificate> {
    if g1.n() != g2.n() || g1.nnz() != g2.nnz() || sorted_degrees(g1) != sorted_degrees(g2) {
        return Some(Certificate::Invariant);
    }
    if g1.n() <= PairSampler::EXHAUSTIVE_LIMIT {
        return (!are_isomorphic(g1, g2)).then_some(Certificate::Exhaustive);
    }
    wl_distinguish(g1, g2, g1.n()).then_some(Certificate::Wl)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPair {
    pub first: CsrMatrix,
    pub second: CsrMatrix,
    pub families: (TemplateFamily, TemplateFamily),
    pub certificate: Certificate,
}

/// Draws certified non-isomorphic pairs. Both graphs of a pair share a node
/// count drawn uniformly from `[min_nodes, max_nodes]`; each graph's family
/// is drawn independently.
#[derive(Debug, Clone)]
pub struct PairSampler {
    rng: Rng,
    min_nodes: usize,
    max_nodes: usize,
    max_attempts: usize,
}

impl PairSampler {
    pub const EXHAUSTIVE_LIMIT: usize = 8;

    pub fn new(seed: u64, min_nodes: usize, max_nodes: usize) -> Result<Self, ProbeError> {
        if min_nodes < 3 || min_nodes > max_nodes {
            return Err(ProbeError::Config(format!(
                "node range [{min_nodes}, {max_nodes}] must satisfy 3 <= min <= max"
            )));
        }
        Ok(Self {
            rng: seeded(seed, streams::PROBE_PAIRS),
            min_nodes,
            max_nodes,
            max_attempts: 1000,
        })
    }

    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn next_pair(&mut self) -> Result<GraphPair, ProbeError> {
        for _ in 0..self.max_attempts {
            let n = self.rng.random_range(self.min_nodes..=self.max_nodes);
            let f1 = TemplateFamily::ALL[self.rng.random_range(0..3)];
            let f2 = TemplateFamily::ALL[self.rng.random_range(0..3)];
            let first = sample_template(f1, n, &mut self.rng);
            let second = sample_template(f2, n, &mut self.rng);
            if let Some(certificate) = certify_non_isomorphic(&first, &second) {
                return Ok(GraphPair {
                    first,
                    second,
                    families: (f1, f2),
                    certificate,
                });
            }
        }
        Err(ProbeError::SamplerExhausted {
            attempts: self.max_attempts,
        })
    }

    pub fn take_pairs(&mut self, count: usize) -> Result<Vec<GraphPair>, ProbeError> {
        (0..count).map(|_| self.next_pair()).collect()
    }
}
