//! Graph data model: CSR adjacency, validated node-classification datasets,
//! adjacency normalization, on-disk format, and synthetic SBM generation.

mod io;
mod normalize;
mod sbm;

pub use io::{load_dataset, write_dataset, DatasetMeta};
pub use normalize::{normalize_adjacency, NormalizedAdjacency};
pub use sbm::{generate_sbm, SbmParams};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::DenseMatrix;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node index {node} out of range for {num_nodes} nodes")]
    IndexOutOfRange { node: usize, num_nodes: usize },
    #[error("self-loop on node {node} in raw edge list")]
    SelfLoop { node: usize },
    #[error("node {node} has zero degree and self-loops are disabled")]
    ZeroDegree { node: usize },
    #[error("adjacency is not binary (entry {value} at ({row}, {col}))")]
    NotBinary { row: usize, col: usize, value: f64 },
    #[error("adjacency is not symmetric: ({row}, {col}) has no mirror")]
    NotSymmetric { row: usize, col: usize },
    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("features file has {features} rows but labels file has {labels}")]
    FeatureLabelMismatch { features: usize, labels: usize },
    #[error("{what} has {found} rows, expected {expected}")]
    RowCountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("node {node} appears in both the {first} and {second} masks")]
    OverlappingMasks {
        node: usize,
        first: &'static str,
        second: &'static str,
    },
    #[error("node {node} listed twice in the {mask} mask")]
    DuplicateMaskEntry { node: usize, mask: &'static str },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Square sparse matrix in compressed sparse row form. Column indices are
/// sorted within each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a matrix from raw parts. Rows must have strictly increasing
    /// column indices.
    pub fn from_parts(n: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self, GraphError> {
        if indptr.len() != n + 1
            || indptr[0] != 0
            || *indptr.last().unwrap() != indices.len()
            || indices.len() != values.len()
        {
            return Err(GraphError::InvalidParams("malformed CSR buffers".into()));
        }
        for r in 0..n {
            if indptr[r] > indptr[r + 1] {
                return Err(GraphError::InvalidParams("indptr not monotone".into()));
            }
            let row = &indices[indptr[r]..indptr[r + 1]];
            if let Some(&c) = row.iter().find(|&&c| c >= n) {
                return Err(GraphError::IndexOutOfRange { node: c, num_nodes: n });
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::InvalidParams(format!(
                    "row {r} column indices not strictly increasing"
                )));
            }
        }
        Ok(Self {
            n,
            indptr,
            indices,
            values,
        })
    }

    /// Number of rows (and columns).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored nonzero count, ‖A‖₀.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_indices(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.values[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    /// Value at `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = self.row_indices(r);
        match cols.binary_search(&c) {
            Ok(k) => self.row_values(r)[k],
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row_indices(r).binary_search(&c).is_ok()
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (&c, &v) in self.row_indices(r).iter().zip(self.row_values(r)) {
                d.set(r, c, v);
            }
        }
        d
    }

    /// Canonical `(u, v)` pairs with `u < v`, in row-major order.
    pub fn upper_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.nnz() / 2);
        for r in 0..self.n {
            for &c in self.row_indices(r) {
                if r < c {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| {
            self.row_indices(r)
                .iter()
                .zip(self.row_values(r))
                .all(|(&c, &v)| self.contains(c, r) && self.get(c, r) == v)
        })
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for r in 0..self.n {
            for (&c, &v) in self.row_indices(r).iter().zip(self.row_values(r)) {
                rows[perm[r]].push((perm[c], v));
            }
        }
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            n: self.n,
            indptr,
            indices,
            values,
        }
    }
}

/// Builds a symmetric binary adjacency from an undirected edge list.
/// Duplicate edges (in either orientation) collapse to one; self-loops are
/// rejected because normalization adds them.
pub fn build_csr(edges: &[(usize, usize)], num_nodes: usize) -> Result<CsrMatrix, GraphError> {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for &(u, v) in edges {
        for node in [u, v] {
            if node >= num_nodes {
                return Err(GraphError::IndexOutOfRange { node, num_nodes });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop { node: u });
        }
        rows[u].push(v);
        rows[v].push(u);
    }
    let mut indptr = Vec::with_capacity(num_nodes + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    for mut row in rows {
        row.sort_unstable();
        row.dedup();
        indices.extend(row);
        indptr.push(indices.len());
    }
    let values = vec![1.0; indices.len()];
    Ok(CsrMatrix {
        n: num_nodes,
        indptr,
        indices,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    /// One class index per node.
    Single(Vec<usize>),
    /// `N × C` binary indicator rows.
    Multi(Vec<Vec<bool>>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Single(v) => v.len(),
            Labels::Multi(rows) => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_multi(&self) -> bool {
        matches!(self, Labels::Multi(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Train/val/test node sets, each sorted ascending and pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Masks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    fn validate(&mut self, num_nodes: usize) -> Result<(), GraphError> {
        let mut owner: Vec<Option<&'static str>> = vec![None; num_nodes];
        for (name, set) in [
            ("train", &mut self.train),
            ("val", &mut self.val),
            ("test", &mut self.test),
        ] {
            set.sort_unstable();
            for w in set.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateMaskEntry { node: w[0], mask: name });
                }
            }
            for &node in set.iter() {
                if node >= num_nodes {
                    return Err(GraphError::IndexOutOfRange { node, num_nodes });
                }
                if let Some(first) = owner[node] {
                    return Err(GraphError::OverlappingMasks {
                        node,
                        first,
                        second: name,
                    });
                }
                owner[node] = Some(name);
            }
        }
        Ok(())
    }
}

/// Immutable, validated node-classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    adjacency: CsrMatrix,
    features: DenseMatrix<f64>,
    labels: Labels,
    masks: Masks,
    class_count: usize,
}

impl GraphDataset {
    /// Validates every dataset invariant and assembles the dataset.
    pub fn new(
        adjacency: CsrMatrix,
        features: DenseMatrix<f64>,
        labels: Labels,
        mut masks: Masks,
        class_count: usize,
    ) -> Result<Self, GraphError> {
        let n = adjacency.n();
        for r in 0..n {
            for (&c, &v) in adjacency.row_indices(r).iter().zip(adjacency.row_values(r)) {
                if v != 1.0 {
                    return Err(GraphError::NotBinary {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
                if c == r {
                    return Err(GraphError::SelfLoop { node: r });
                }
                if !adjacency.contains(c, r) {
                    return Err(GraphError::NotSymmetric { row: r, col: c });
                }
            }
        }
        if features.rows() != labels.len() {
            return Err(GraphError::FeatureLabelMismatch {
                features: features.rows(),
                labels: labels.len(),
            });
        }
        if features.rows() != n {
            return Err(GraphError::RowCountMismatch {
                what: "features".into(),
                expected: n,
                found: features.rows(),
            });
        }
        if class_count == 0 {
            return Err(GraphError::InvalidParams("class_count must be positive".into()));
        }
        match &labels {
            Labels::Single(v) => {
                if let Some((node, &c)) = v.iter().enumerate().find(|(_, &c)| c >= class_count) {
                    return Err(GraphError::InvalidParams(format!(
                        "label {c} of node {node} exceeds class_count {class_count}"
                    )));
                }
            }
            Labels::Multi(rows) => {
                if let Some(node) = rows.iter().position(|r| r.len() != class_count) {
                    return Err(GraphError::InvalidParams(format!(
                        "label row {node} has {} entries, expected {class_count}",
                        rows[node].len()
                    )));
                }
            }
        }
        if !features.all_finite() {
            return Err(GraphError::InvalidParams("non-finite feature value".into()));
        }
        masks.validate(n)?;
        Ok(Self {
            adjacency,
            features,
            labels,
            masks,
            class_count,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.n()
    }

    /// Undirected edges, each counted once.
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &DenseMatrix<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_is_mirrored() {
        let a = build_csr(&[(0, 1)], 2).unwrap();
        assert_eq!(a.row_indices(0), &[1]);
        assert_eq!(a.row_indices(1), &[0]);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn empty_edge_list_keeps_rows() {
        let a = build_csr(&[], 3).unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.indptr(), &[0, 0, 0, 0]);
    }

    #[test]
    fn duplicates_collapse() {
        let a = build_csr(&[(0, 1), (1, 0), (0, 1)], 2).unwrap();
        assert_eq!(a, build_csr(&[(0, 1)], 2).unwrap());
    }

    #[test]
    fn rejects_out_of_range_and_self_loops() {
        assert!(matches!(
            build_csr(&[(0, 5)], 3),
            Err(GraphError::IndexOutOfRange { node: 5, .. })
        ));
        assert!(matches!(build_csr(&[(1, 1)], 3), Err(GraphError::SelfLoop { node: 1 })));
    }

    #[test]
    fn dataset_rejects_overlapping_masks() {
        let a = build_csr(&[(0, 1)], 3).unwrap();
        let masks = Masks {
            train: vec![0, 1],
            val: vec![1],
            test: vec![2],
        };
        let err = GraphDataset::new(a, DenseMatrix::zeros(3, 2), Labels::Single(vec![0, 1, 0]), masks, 2).unwrap_err();
        assert!(matches!(err, GraphError::OverlappingMasks { node: 1, .. }));
    }

    #[test]
    fn permutation_preserves_edge_count() {
        let a = build_csr(&[(0, 1), (1, 2)], 3).unwrap();
        let p = a.permuted(&[2, 0, 1]);
        assert_eq!(p.nnz(), 4);
        assert!(p.contains(2, 0) && p.contains(0, 1));
        assert!(p.is_symmetric());
    }
}
