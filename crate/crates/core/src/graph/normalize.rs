use serde::{Deserialize, Serialize};

use super::{CsrMatrix, GraphError};

/// The degree-normalized adjacency `Â` consumed by every aggregation kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAdjacency {
    matrix: CsrMatrix,
    self_loops_added: bool,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn self_loops_added(&self) -> bool {
        self.self_loops_added
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// `n × n` identity, i.e. the normalization of `n` isolated nodes with
    /// self-loops.
    pub fn identity(n: usize) -> Self {
        let matrix = CsrMatrix::from_parts(n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
            .expect("identity CSR is well formed");
        Self {
            matrix,
            self_loops_added: true,
        }
    }
}

/// Returns `D̃^(-1/2)(A + I)D̃^(-1/2)` when `add_self_loops` is set, otherwise
/// `D^(-1/2) A D^(-1/2)`.
///
/// The adjacency must be symmetric, binary and loop-free. Without self-loops
/// a zero-degree node is an error rather than a silently patched row.
pub fn normalize_adjacency(adjacency: &CsrMatrix, add_self_loops: bool) -> Result<NormalizedAdjacency, GraphError> {
    let n = adjacency.n();
    let loop_weight = usize::from(add_self_loops);
    let mut degree = Vec::with_capacity(n);
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
        let d = adjacency.row_nnz(r) + loop_weight;
        if d == 0 {
            return Err(GraphError::ZeroDegree { node: r });
        }
        degree.push(d as f64);
    }

    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0);
    let mut indices = Vec::with_capacity(adjacency.nnz() + loop_weight * n);
    let mut values = Vec::with_capacity(indices.capacity());
    for r in 0..n {
        let mut diag_done = !add_self_loops;
        for &c in adjacency.row_indices(r) {
            if !diag_done && c > r {
                indices.push(r);
                values.push(1.0 / degree[r]);
                diag_done = true;
            }
            indices.push(c);
            // d_r·d_c is commutative in IEEE arithmetic, so (r,c) and (c,r)
            // receive bit-identical values.
            values.push(1.0 / (degree[r] * degree[c]).sqrt());
        }
        if !diag_done {
            indices.push(r);
            values.push(1.0 / degree[r]);
        }
        indptr.push(indices.len());
    }
    let matrix = CsrMatrix::from_parts(n, indptr, indices, values)?;
    Ok(NormalizedAdjacency {
        matrix,
        self_loops_added: add_self_loops,
    })
}
