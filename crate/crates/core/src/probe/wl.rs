use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::graph::{build_csr, CsrMatrix};

/// Color counts after one WL round. Color ids are canonical: they depend only
/// on the refinement signatures, never on node numbering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorHistogram {
    pub iteration: usize,
    pub counts: BTreeMap<usize, usize>,
}

impl ColorHistogram {
    fn from_colors(iteration: usize, colors: &[usize]) -> Self {
        let mut counts = BTreeMap::new();
        for &c in colors {
            *counts.entry(c).or_insert(0) += 1;
        }
        Self { iteration, counts }
    }

    pub fn num_colors(&self) -> usize {
        self.counts.len()
    }
}

/// Replaces every key by its rank among the distinct keys.
fn rank_keys<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut distinct: Vec<K> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    keys.iter()
        .map(|k| distinct.binary_search(k).expect("key present"))
        .collect()
}

/// 1-WL refinement run jointly over several graphs so that color ids are
/// comparable between them. Returns, per graph, the histogram of every round
/// `0..=rounds`.
///
/// Round 0 colors are node degrees, combined with `initial` keys when given.
/// Each round a node's new color is the rank of its signature
/// `(own color, sorted neighbor colors)` among all signatures of that round.
pub fn wl_refine_joint(graphs: &[&CsrMatrix], rounds: usize, initial: Option<&[Vec<u64>]>) -> Vec<Vec<ColorHistogram>> {
    let offsets: Vec<usize> = graphs
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += g.n();
            Some(start)
        })
        .collect();
    let total: usize = graphs.iter().map(|g| g.n()).sum();
    let mut keys0 = Vec::with_capacity(total);
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.n() {
            let feat = initial.map_or(0, |init| init[gi][v]);
            keys0.push((g.row_nnz(v), feat));
        }
    }
    let mut colors = rank_keys(&keys0);
    let snapshot = |colors: &[usize], it: usize| -> Vec<ColorHistogram> {
        graphs
            .iter()
            .zip(&offsets)
            .map(|(g, &off)| ColorHistogram::from_colors(it, &colors[off..off + g.n()]))
            .collect()
    };
    let mut per_round = vec![snapshot(&colors, 0)];
    for it in 1..=rounds {
        let mut sigs = Vec::with_capacity(total);
        for (g, &off) in graphs.iter().zip(&offsets) {
            for v in 0..g.n() {
                let mut neigh: Vec<usize> = g.row_indices(v).iter().map(|&u| colors[off + u]).collect();
                neigh.sort_unstable();
                sigs.push((colors[off + v], neigh));
            }
        }
        colors = rank_keys(&sigs);
        per_round.push(snapshot(&colors, it));
    }
    (0..graphs.len())
        .map(|gi| per_round.iter().map(|r| r[gi].clone()).collect())
        .collect()
}

/// Histogram after `rounds` rounds of 1-WL on a single graph.
pub fn wl_refine(graph: &CsrMatrix, rounds: usize, initial: Option<&[u64]>) -> ColorHistogram {
    let init = initial.map(|i| vec![i.to_vec()]);
    let mut h = wl_refine_joint(&[graph], rounds, init.as_deref());
    h.remove(0).pop().expect("round 0 always present")
}

/// True iff the two graphs' joint WL histograms differ at some round
/// `≤ rounds`.
pub fn wl_distinguish(g1: &CsrMatrix, g2: &CsrMatrix, rounds: usize) -> bool {
    let h = wl_refine_joint(&[g1, g2], rounds, None);
    h[0].iter().zip(&h[1]).any(|(a, b)| a != b)
}

/// Induced `depth`-ball around a node, with the root's position marked.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedSubgraph {
    /// Original node ids, ascending.
    pub nodes: Vec<usize>,
    /// Index of the root within `nodes`.
    pub root: usize,
    pub adjacency: CsrMatrix,
}

pub fn rooted_subtree(graph: &CsrMatrix, node: usize, depth: usize) -> Result<RootedSubgraph, ProbeError> {
    if node >= graph.n() {
        return Err(ProbeError::NodeOutOfRange {
            node,
            num_nodes: graph.n(),
        });
    }
    let mut dist = vec![usize::MAX; graph.n()];
    dist[node] = 0;
    let mut queue = VecDeque::from([node]);
    while let Some(u) = queue.pop_front() {
        if dist[u] == depth {
            continue;
        }
        for &v in graph.row_indices(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let nodes: Vec<usize> = (0..graph.n()).filter(|&v| dist[v] != usize::MAX).collect();
    let local = |v: usize| nodes.binary_search(&v).ok();
    let mut edges = Vec::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in graph.row_indices(u) {
            if let Some(j) = local(v) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    let adjacency = build_csr(&edges, nodes.len())?;
    Ok(RootedSubgraph {
        root: local(node).expect("root is in its own ball"),
        nodes,
        adjacency,
    })
}
