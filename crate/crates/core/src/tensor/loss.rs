use super::{mismatch, DenseMatrix, Scalar, TensorError};

#[derive(Debug, Clone)]
pub struct LossOutput<T: Scalar> {
    /// Loss value, accumulated in f64 regardless of `T`.
    pub loss: f64,
    pub grad: DenseMatrix<T>,
}

/// Mean softmax cross-entropy over rows, with its gradient w.r.t. the logits.
///
/// With `row_weights`, the loss is `Σ w_r ℓ_r / Σ w_r`; otherwise rows count
/// equally. Rows are max-shifted before exponentiation.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &DenseMatrix<T>,
    labels: &[usize],
    row_weights: Option<&[T]>,
) -> Result<LossOutput<T>, TensorError> {
    let (n, c) = logits.shape();
    if labels.len() != n {
        return Err(mismatch(
            "softmax_cross_entropy",
            format!("{n} logit rows but {} labels", labels.len()),
        ));
    }
    if let Some(w) = row_weights {
        if w.len() != n {
            return Err(mismatch(
                "softmax_cross_entropy",
                format!("{n} rows but {} weights", w.len()),
            ));
        }
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(TensorError::LabelOutOfRange { label, classes: c });
    }
    let total_weight: f64 = match row_weights {
        Some(w) => w.iter().map(|v| v.as_f64()).sum(),
        None => n as f64,
    };
    let mut grad = DenseMatrix::zeros(n, c);
    if total_weight == 0.0 {
        return Ok(LossOutput { loss: 0.0, grad });
    }
    let norm = T::of(total_weight);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let g = grad.row_mut(r);
        let mut sum = T::zero();
        for (gi, &z) in g.iter_mut().zip(row) {
            *gi = (z - max).exp();
            sum += *gi;
        }
        let weight = row_weights.map_or(T::one(), |w| w[r]);
        // -log softmax = log Σ exp(z - max) - (z_label - max)
        loss += weight.as_f64() * (sum.ln() - (row[label] - max)).as_f64();
        for (k, gi) in g.iter_mut().enumerate() {
            let p = *gi / sum;
            let target = if k == label { T::one() } else { T::zero() };
            *gi = weight * (p - target) / norm;
        }
    }
    Ok(LossOutput {
        loss: loss / total_weight,
        grad,
    })
}

/// Mean elementwise binary cross-entropy with logits.
pub fn sigmoid_bce<T: Scalar>(logits: &DenseMatrix<T>, targets: &DenseMatrix<T>) -> Result<LossOutput<T>, TensorError> {
    if logits.shape() != targets.shape() {
        return Err(mismatch(
            "sigmoid_bce",
            format!("{:?} vs {:?}", logits.shape(), targets.shape()),
        ));
    }
    let count = logits.as_slice().len();
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    if count == 0 {
        return Ok(LossOutput { loss: 0.0, grad });
    }
    let norm = T::of(count as f64);
    let mut loss = 0.0;
    for ((g, &z), &t) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(logits.as_slice())
        .zip(targets.as_slice())
    {
        // max(z, 0) - z t + log(1 + e^{-|z|})
        loss += (z.max(T::zero()) - z * t + (-z.abs()).exp().ln_1p()).as_f64();
        let sig = if z >= T::zero() {
            T::one() / (T::one() + (-z).exp())
        } else {
            let e = z.exp();
            e / (T::one() + e)
        };
        *g = (sig - t) / norm;
    }
    Ok(LossOutput {
        loss: loss / count as f64,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let out = softmax_cross_entropy(&DenseMatrix::from_rows(&[vec![0.0f64, 0.0]]), &[0], None).unwrap();
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(out.grad.as_slice(), &[-0.5, 0.5]);
    }

    #[test]
    fn huge_logit_does_not_overflow() {
        let out = softmax_cross_entropy(&DenseMatrix::from_rows(&[vec![1000.0f64, 0.0]]), &[0], None).unwrap();
        assert!(out.loss.is_finite() && out.loss < 1e-12);
        assert!(out.grad.all_finite());
        let out32 = softmax_cross_entropy(&DenseMatrix::from_rows(&[vec![1000.0f32, 0.0]]), &[0], None).unwrap();
        assert!(out32.loss.is_finite() && out32.loss < 1e-6);
    }

    #[test]
    fn label_out_of_range() {
        let err = softmax_cross_entropy(&DenseMatrix::<f64>::zeros(1, 2), &[2], None).unwrap_err();
        assert_eq!(err, TensorError::LabelOutOfRange { label: 2, classes: 2 });
    }

    #[test]
    fn row_weights_select_rows() {
        let logits = DenseMatrix::from_rows(&[vec![0.0f64, 0.0], vec![5.0, -5.0]]);
        let out = softmax_cross_entropy(&logits, &[0, 1], Some(&[1.0, 0.0])).unwrap();
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(out.grad.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn bce_zero_logit_is_ln2_and_stable() {
        let out = sigmoid_bce(
            &DenseMatrix::from_rows(&[vec![0.0f64]]),
            &DenseMatrix::from_rows(&[vec![1.0]]),
        )
        .unwrap();
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-15);
        let out = sigmoid_bce(
            &DenseMatrix::from_rows(&[vec![1000.0f64, -1000.0]]),
            &DenseMatrix::from_rows(&[vec![1.0, 0.0]]),
        )
        .unwrap();
        assert!(out.loss.is_finite() && out.loss < 1e-12);
        assert!(out.grad.all_finite());
    }

    #[test]
    fn bce_shape_mismatch() {
        assert!(sigmoid_bce(&DenseMatrix::<f64>::zeros(2, 2), &DenseMatrix::zeros(2, 3)).is_err());
    }
}
