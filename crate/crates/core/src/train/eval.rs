use serde::{Deserialize, Serialize};

use super::{LayerwiseModel, LossKind, TrainError, TrainingData};
use crate::graph::{Labels, Split};
use crate::ledger::CostLedger;
use crate::tensor::{gather_rows, DenseMatrix, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub loss: f64,
    pub split: Split,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// `(micro, macro)` F1 for single-label predictions. Macro averages over the
/// classes that occur in the truth or the predictions.
pub fn single_label_f1(truth: &[usize], pred: &[usize], class_count: usize) -> (f64, f64) {
    assert_eq!(truth.len(), pred.len());
    let mut tp = vec![0usize; class_count];
    let mut fp = vec![0usize; class_count];
    let mut fn_ = vec![0usize; class_count];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let present: Vec<f64> = (0..class_count)
        .filter(|&c| tp[c] + fp[c] + fn_[c] > 0)
        .map(|c| f1(tp[c], fp[c], fn_[c]))
        .collect();
    let macro_ = if present.is_empty() {
        1.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    if !truth.is_empty() {
        let accuracy = tp.iter().sum::<usize>() as f64 / truth.len() as f64;
        debug_assert!(
            (micro - accuracy).abs() < 1e-12,
            "micro-F1 {micro} != accuracy {accuracy}"
        );
    }
    (micro, macro_)
}

/// `(micro, macro)` F1 for multi-label indicator rows.
pub fn multi_label_f1(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> (f64, f64) {
    assert_eq!(truth.len(), pred.len());
    let classes = truth.first().map_or(0, Vec::len);
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (t_row, p_row) in truth.iter().zip(pred) {
        for c in 0..classes {
            match (t_row[c], p_row[c]) {
                (true, true) => tp[c] += 1,
                (false, true) => fp[c] += 1,
                (true, false) => fn_[c] += 1,
                (false, false) => {}
            }
        }
    }
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let present: Vec<f64> = (0..classes)
        .filter(|&c| tp[c] + fp[c] + fn_[c] > 0)
        .map(|c| f1(tp[c], fp[c], fn_[c]))
        .collect();
    let macro_ = if present.is_empty() {
        1.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    (micro, macro_)
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Scores logits for `rows` (one logit row per entry) against the labels.
pub(crate) fn score_logits<T: Scalar>(logits: &DenseMatrix<T>, labels: &Labels, rows: &[usize]) -> (f64, f64) {
    match labels {
        Labels::Single(truth) => {
            let t: Vec<usize> = rows.iter().map(|&r| truth[r]).collect();
            let p: Vec<usize> = (0..logits.rows()).map(|i| argmax(logits.row(i))).collect();
            single_label_f1(&t, &p, logits.cols())
        }
        Labels::Multi(truth) => {
            let t: Vec<Vec<bool>> = rows.iter().map(|&r| truth[r].clone()).collect();
            // sigmoid(z) >= 0.5 exactly when z >= 0
            let p: Vec<Vec<bool>> = (0..logits.rows())
                .map(|i| logits.row(i).iter().map(|&z| z >= T::zero()).collect())
                .collect();
            multi_label_f1(&t, &p)
        }
    }
}

/// Micro/macro F1 and loss of the full model on one split.
pub fn evaluate<T: Scalar>(
    model: &LayerwiseModel<T>,
    data: &TrainingData<T>,
    split: Split,
) -> Result<EvalReport, TrainError> {
    let rows = data.masks.get(split);
    if rows.is_empty() {
        return Err(TrainError::EmptySplit(split));
    }
    let all = model.logits(&data.a_hat, &data.features, &mut CostLedger::new())?;
    let logits = gather_rows(&all, rows)?;
    let loss = data
        .targets
        .select(rows)?
        .loss(&logits, LossKind::for_labels(&data.labels))?
        .loss;
    let (micro_f1, macro_f1) = score_logits(&logits, &data.labels, rows);
    Ok(EvalReport {
        micro_f1,
        macro_f1,
        loss,
        split,
    })
}
