use super::{mismatch, DenseMatrix, Scalar, TensorError};
use crate::graph::NormalizedAdjacency;
use crate::ledger::CostLedger;

/// `out = a · b`, accumulated in i-k-j order.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, TensorError> {
    if a.cols() != b.rows() {
        return Err(mismatch("matmul", format!("{:?} x {:?}", a.shape(), b.shape())));
    }
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let out_row = out.row_mut(i);
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `out = aᵀ · b`.
pub fn matmul_tn<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, TensorError> {
    if a.rows() != b.rows() {
        return Err(mismatch("matmul_tn", format!("{:?}ᵀ x {:?}", a.shape(), b.shape())));
    }
    let mut out = DenseMatrix::zeros(a.cols(), b.cols());
    for r in 0..a.rows() {
        let b_row = b.row(r);
        for (i, &ari) in a.row(r).iter().enumerate() {
            if ari == T::zero() {
                continue;
            }
            for (o, &brj) in out.row_mut(i).iter_mut().zip(b_row) {
                *o += ari * brj;
            }
        }
    }
    Ok(out)
}

/// `out = a · bᵀ`.
pub fn matmul_nt<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, TensorError> {
    if a.cols() != b.cols() {
        return Err(mismatch("matmul_nt", format!("{:?} x {:?}ᵀ", a.shape(), b.shape())));
    }
    Ok(DenseMatrix::from_fn(a.rows(), b.rows(), |i, j| {
        a.row(i)
            .iter()
            .zip(b.row(j))
            .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }))
}

pub fn gather_rows<T: Scalar>(x: &DenseMatrix<T>, rows: &[usize]) -> Result<DenseMatrix<T>, TensorError> {
    let mut out = DenseMatrix::zeros(rows.len(), x.cols());
    for (k, &r) in rows.iter().enumerate() {
        if r >= x.rows() {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: r,
                len: x.rows(),
            });
        }
        out.row_mut(k).copy_from_slice(x.row(r));
    }
    Ok(out)
}

fn debug_check_finite<T: Scalar>(m: &DenseMatrix<T>, op: &str) {
    debug_assert!(m.all_finite(), "non-finite value entering {op}");
}

/// Accumulates `Σ_j Â[r, j] · x[pos(j)]` into `out`, visiting neighbors in
/// CSR order.
fn aggregate_row<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    r: usize,
    x: &DenseMatrix<T>,
    pos: &impl Fn(usize) -> Option<usize>,
    out: &mut [T],
) -> Result<(), TensorError> {
    let m = a_hat.matrix();
    for (&j, &v) in m.row_indices(r).iter().zip(m.row_values(r)) {
        let p = pos(j).ok_or_else(|| {
            mismatch(
                "spmm_rows_gathered",
                format!("neighbor {j} of row {r} was not gathered"),
            )
        })?;
        let w = T::of(v);
        for (o, &xv) in out.iter_mut().zip(x.row(p)) {
            *o += w * xv;
        }
    }
    Ok(())
}

/// Feature aggregation `Â·X` over all nodes. Counts one FA call and
/// `2·‖Â‖₀·D` flops; registers the output buffer.
pub fn spmm<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    x: &DenseMatrix<T>,
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    if a_hat.n() != x.rows() {
        return Err(mismatch(
            "spmm",
            format!("Â is {n}x{n} but X has {} rows", x.rows(), n = a_hat.n()),
        ));
    }
    debug_check_finite(x, "spmm");
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    let ident = |j: usize| Some(j);
    for r in 0..a_hat.n() {
        aggregate_row(a_hat, r, x, &ident, out.row_mut(r))?;
    }
    ledger.record_fa(2 * a_hat.nnz() as u64 * x.cols() as u64);
    ledger.alloc_matrix(&out);
    Ok(out)
}

/// Rows `rows` of `Â·X`, reading only the neighbor rows of `X` they need.
pub fn spmm_rows<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    x: &DenseMatrix<T>,
    rows: &[usize],
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    if a_hat.n() != x.rows() {
        return Err(mismatch(
            "spmm_rows",
            format!("Â is {n}x{n} but X has {} rows", x.rows(), n = a_hat.n()),
        ));
    }
    aggregate_selected(a_hat, x, &|j| Some(j), rows, ledger)
}

/// Like [`spmm_rows`], but `x_local` holds only the rows of the nodes listed
/// (ascending) in `x_nodes`. Used by the neighborhood-expanding mini-batch
/// trainer, which never materializes the full `X`.
pub fn spmm_rows_gathered<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    x_local: &DenseMatrix<T>,
    x_nodes: &[usize],
    rows: &[usize],
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    if x_local.rows() != x_nodes.len() {
        return Err(mismatch(
            "spmm_rows_gathered",
            format!("{} local rows for {} nodes", x_local.rows(), x_nodes.len()),
        ));
    }
    debug_assert!(x_nodes.windows(2).all(|w| w[0] < w[1]));
    aggregate_selected(a_hat, x_local, &|j| x_nodes.binary_search(&j).ok(), rows, ledger)
}

fn aggregate_selected<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    x: &DenseMatrix<T>,
    pos: &impl Fn(usize) -> Option<usize>,
    rows: &[usize],
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    debug_check_finite(x, "spmm_rows");
    let mut out = DenseMatrix::zeros(rows.len(), x.cols());
    let mut touched = 0u64;
    for (k, &r) in rows.iter().enumerate() {
        if r >= a_hat.n() {
            return Err(TensorError::IndexOutOfRange {
                op: "spmm_rows",
                index: r,
                len: a_hat.n(),
            });
        }
        aggregate_row(a_hat, r, x, pos, out.row_mut(k))?;
        touched += a_hat.matrix().row_nnz(r) as u64;
    }
    ledger.record_fa(2 * touched * x.cols() as u64);
    ledger.alloc_matrix(&out);
    Ok(out)
}

/// Backward of a row-selected aggregation: given `G = ∂L/∂(Â·X)[rows]`,
/// returns `∂L/∂X` restricted to `x_nodes` (all nodes when `None`).
/// Counts flops but not an FA call.
pub fn spmm_scatter_backward<T: Scalar>(
    a_hat: &NormalizedAdjacency,
    grad_out: &DenseMatrix<T>,
    rows: &[usize],
    x_nodes: Option<&[usize]>,
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    if grad_out.rows() != rows.len() {
        return Err(mismatch(
            "spmm_scatter_backward",
            format!("{} gradient rows for {} output rows", grad_out.rows(), rows.len()),
        ));
    }
    let n_local = x_nodes.map_or(a_hat.n(), <[usize]>::len);
    let mut grad_x = DenseMatrix::zeros(n_local, grad_out.cols());
    let m = a_hat.matrix();
    let mut touched = 0u64;
    for (k, &r) in rows.iter().enumerate() {
        let g = grad_out.row(k);
        for (&j, &v) in m.row_indices(r).iter().zip(m.row_values(r)) {
            let p = match x_nodes {
                None => j,
                Some(nodes) => nodes.binary_search(&j).map_err(|_| {
                    mismatch(
                        "spmm_scatter_backward",
                        format!("neighbor {j} of row {r} not in gathered set"),
                    )
                })?,
            };
            let w = T::of(v);
            for (o, &gv) in grad_x.row_mut(p).iter_mut().zip(g) {
                *o += w * gv;
            }
        }
        touched += m.row_nnz(r) as u64;
    }
    ledger.record_flops(2 * touched * grad_out.cols() as u64);
    ledger.alloc_matrix(&grad_x);
    Ok(grad_x)
}

#[derive(Debug, Clone)]
pub struct AffineReluOutput<T: Scalar> {
    pub hidden: DenseMatrix<T>,
    pub pre_activation: DenseMatrix<T>,
}

/// Feature transformation `σ(X̂·W)` with ReLU. Counts one FT call.
pub fn affine_relu_forward<T: Scalar>(
    x_hat: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    ledger: &mut CostLedger,
) -> Result<AffineReluOutput<T>, TensorError> {
    debug_check_finite(x_hat, "affine_relu_forward");
    let pre = matmul(x_hat, w).map_err(|_| {
        mismatch(
            "affine_relu_forward",
            format!("X̂ {:?} · W {:?}", x_hat.shape(), w.shape()),
        )
    })?;
    let hidden = pre.map(|v| v.max(T::zero()));
    ledger.record_ft(2 * (x_hat.rows() * x_hat.cols() * w.cols()) as u64);
    ledger.alloc_matrix(&pre);
    ledger.alloc_matrix(&hidden);
    Ok(AffineReluOutput {
        hidden,
        pre_activation: pre,
    })
}

/// `grad ⊙ 1[pre > 0]`.
pub fn relu_mask_backward<T: Scalar>(
    pre: &DenseMatrix<T>,
    grad: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>, TensorError> {
    if pre.shape() != grad.shape() {
        return Err(mismatch(
            "relu_mask_backward",
            format!("{:?} vs {:?}", pre.shape(), grad.shape()),
        ));
    }
    let mut out = grad.clone();
    for (o, &p) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if p <= T::zero() {
            *o = T::zero();
        }
    }
    Ok(out)
}

/// Backward of [`affine_relu_forward`]: returns `(∂L/∂W, ∂L/∂X̂)`, the latter
/// only when `want_input_grad`.
pub fn affine_relu_backward<T: Scalar>(
    x_hat: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    pre_activation: &DenseMatrix<T>,
    grad_hidden: &DenseMatrix<T>,
    want_input_grad: bool,
    ledger: &mut CostLedger,
) -> Result<(DenseMatrix<T>, Option<DenseMatrix<T>>), TensorError> {
    let grad_pre = relu_mask_backward(pre_activation, grad_hidden)?;
    ledger.alloc_matrix(&grad_pre);
    let grad_w = matmul_tn(x_hat, &grad_pre)?;
    let mut flops = 2 * (x_hat.rows() * x_hat.cols() * w.cols()) as u64;
    let grad_x = if want_input_grad {
        let g = matmul_nt(&grad_pre, w)?;
        flops *= 2;
        ledger.alloc_matrix(&g);
        Some(g)
    } else {
        None
    };
    ledger.record_flops(flops);
    Ok((grad_w, grad_x))
}

/// Linear classifier head `H·Θ` (not an FT step).
pub fn linear_forward<T: Scalar>(
    h: &DenseMatrix<T>,
    theta: &DenseMatrix<T>,
    ledger: &mut CostLedger,
) -> Result<DenseMatrix<T>, TensorError> {
    let out = matmul(h, theta)?;
    ledger.record_flops(2 * (h.rows() * h.cols() * theta.cols()) as u64);
    ledger.alloc_matrix(&out);
    Ok(out)
}

/// Returns `(∂L/∂Θ, ∂L/∂H)`.
pub fn linear_backward<T: Scalar>(
    h: &DenseMatrix<T>,
    theta: &DenseMatrix<T>,
    grad_out: &DenseMatrix<T>,
    ledger: &mut CostLedger,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>), TensorError> {
    let grad_theta = matmul_tn(h, grad_out)?;
    let grad_h = matmul_nt(grad_out, theta)?;
    ledger.record_flops(4 * (h.rows() * h.cols() * theta.cols()) as u64);
    ledger.alloc_matrix(&grad_h);
    Ok((grad_theta, grad_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, normalize_adjacency};

    fn naive(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn identity_adjacency_leaves_x_unchanged() {
        let a = NormalizedAdjacency::identity(3);
        let x = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 0.0]]);
        let mut ledger = CostLedger::new();
        assert_eq!(spmm(&a, &x, &mut ledger).unwrap(), x);
        assert_eq!(spmm_rows(&a, &x, &[1], &mut ledger).unwrap().row(0), x.row(1));
        assert_eq!(ledger.fa_calls, 2);
    }

    #[test]
    fn two_node_average() {
        let a = normalize_adjacency(&build_csr(&[(0, 1)], 2).unwrap(), true).unwrap();
        let x = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let mut ledger = CostLedger::new();
        let y = spmm(&a, &x, &mut ledger).unwrap();
        assert_eq!(y, DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert_eq!(ledger.flops, 2 * 4 * 2);
    }

    #[test]
    fn spmm_rejects_dimension_mismatch() {
        let a = NormalizedAdjacency::identity(3);
        let x = DenseMatrix::<f64>::zeros(4, 2);
        assert!(spmm(&a, &x, &mut CostLedger::new()).is_err());
        assert!(matches!(
            spmm_rows(&a, &DenseMatrix::<f64>::zeros(3, 2), &[5], &mut CostLedger::new()),
            Err(TensorError::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn affine_identity_and_clamp() {
        let mut ledger = CostLedger::new();
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.5]]);
        let out = affine_relu_forward(&x, &DenseMatrix::identity(2), &mut ledger).unwrap();
        assert_eq!(out.hidden, x);
        let x = DenseMatrix::from_rows(&[vec![-1.0, 2.0]]);
        let out = affine_relu_forward(&x, &DenseMatrix::identity(2), &mut ledger).unwrap();
        assert_eq!(out.hidden.as_slice(), &[0.0, 2.0]);
        assert_eq!(ledger.ft_calls, 2);
    }

    #[test]
    fn affine_matches_triple_loop() {
        let mut s = 99;
        let x = DenseMatrix::from_fn(5, 3, |_, _| lcg(&mut s));
        let w = DenseMatrix::from_fn(3, 4, |_, _| lcg(&mut s));
        let mut ledger = CostLedger::new();
        let out = affine_relu_forward(&x, &w, &mut ledger).unwrap();
        let oracle = naive(&x, &w);
        assert!(out.pre_activation.max_abs_diff(&oracle).unwrap() < 1e-12);
        assert_eq!(ledger.flops, 2 * 5 * 3 * 4);
        assert_eq!(ledger.peak_activation_bytes, 2 * 5 * 4 * 8);
    }

    #[test]
    fn transposed_products_match_naive() {
        let mut s = 5;
        let a = DenseMatrix::from_fn(4, 3, |_, _| lcg(&mut s));
        let b = DenseMatrix::from_fn(4, 2, |_, _| lcg(&mut s));
        let c = DenseMatrix::from_fn(5, 3, |_, _| lcg(&mut s));
        assert!(
            matmul_tn(&a, &b)
                .unwrap()
                .max_abs_diff(&naive(&a.transpose(), &b))
                .unwrap()
                < 1e-14
        );
        assert!(
            matmul_nt(&a, &c)
                .unwrap()
                .max_abs_diff(&naive(&a, &c.transpose()))
                .unwrap()
                < 1e-14
        );
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn gathered_requires_all_neighbors() {
        let a = normalize_adjacency(&build_csr(&[(0, 1), (1, 2)], 3).unwrap(), true).unwrap();
        let x = DenseMatrix::<f64>::zeros(2, 1);
        assert!(spmm_rows_gathered(&a, &x, &[0, 1], &[1], &mut CostLedger::new()).is_err());
        assert!(spmm_rows_gathered(&a, &x, &[0, 1], &[0], &mut CostLedger::new()).is_ok());
    }
}
