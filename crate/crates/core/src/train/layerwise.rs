use std::time::Instant;

use rand::seq::SliceRandom;

use super::eval::score_logits;
use super::model::{init_classifier, init_layer_weight};
use super::{
    ensure_train_mask, EpochHook, EpochRecord, EpochReport, HookDecision, LayerTrainConfig, LayerwiseModel, LossKind,
    Targets, TrainError, TrainOutcome, TrainingData,
};
use crate::ledger::CostLedger;
use crate::rng::{seeded, streams};
use crate::tensor::{
    adam_step, affine_relu_backward, affine_relu_forward, gather_rows, linear_backward, linear_forward, matmul, spmm,
    AdamConfig, AdamState, DenseMatrix, Scalar,
};

#[derive(Debug, Clone)]
pub struct LayerGradients<T: Scalar> {
    pub loss: f64,
    pub grad_w: DenseMatrix<T>,
    pub grad_theta: DenseMatrix<T>,
}

/// Loss of `σ(X̂_B·W)·Θ` against the batch targets, with gradients for `W`
/// and `Θ`.
pub fn layer_objective<T: Scalar>(
    x_hat_batch: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    theta: &DenseMatrix<T>,
    targets: &Targets<T>,
    loss_kind: LossKind,
    ledger: &mut CostLedger,
) -> Result<LayerGradients<T>, TrainError> {
    let fwd = affine_relu_forward(x_hat_batch, w, ledger)?;
    let logits = linear_forward(&fwd.hidden, theta, ledger)?;
    let out = targets.loss(&logits, loss_kind)?;
    ledger.alloc_matrix(&out.grad);
    let (grad_theta, grad_h) = linear_backward(&fwd.hidden, theta, &out.grad, ledger)?;
    let (grad_w, _) = affine_relu_backward(x_hat_batch, w, &fwd.pre_activation, &grad_h, false, ledger)?;
    Ok(LayerGradients {
        loss: out.loss,
        grad_w,
        grad_theta,
    })
}

/// Greedy layer-wise training.
///
/// Each layer aggregates once over the whole graph, trains its weight and a
/// throwaway linear classifier on shuffled mini-batches of the train nodes,
/// then materializes its output for every node. Only the last layer's
/// classifier is kept. `hook` is called after every epoch and may end the
/// current layer.
pub fn train_layerwise<T: Scalar>(
    data: &TrainingData<T>,
    configs: &[LayerTrainConfig],
    mut hook: Option<&mut dyn EpochHook>,
) -> Result<TrainOutcome<T>, TrainError> {
    if configs.is_empty() {
        return Err(TrainError::Config("at least one layer is required".into()));
    }
    for cfg in configs {
        cfg.validate()?;
        data.check_loss_kind(cfg.loss_kind)?;
    }
    ensure_train_mask(data)?;
    let num_layers = configs.len();
    let start = Instant::now();
    let mut ledger = CostLedger::new();
    let mut history = Vec::new();
    let mut epochs_per_layer = Vec::with_capacity(num_layers);
    let mut weights = Vec::with_capacity(num_layers);
    let mut classifier = None;
    let mut x = data.features.clone();
    ledger.alloc_matrix(&x);
    let train = &data.masks.train;
    let want_val = hook.as_ref().is_some_and(|h| h.wants_val_f1());
    if want_val && data.masks.val.is_empty() {
        return Err(TrainError::EmptySplit(crate::graph::Split::Val));
    }

    for (l, cfg) in configs.iter().enumerate() {
        let x_hat = spmm(&data.a_hat, &x, &mut ledger)?;
        ledger.record_materialized(x_hat.byte_size());
        ledger.free_matrix(&x);

        let mut w: DenseMatrix<T> = init_layer_weight(x_hat.cols(), cfg.hidden_dim, cfg.seed, l);
        let mut theta: DenseMatrix<T> = init_classifier(cfg.hidden_dim, data.class_count, cfg.seed, l);
        let adam = AdamConfig::with_lr(cfg.learning_rate);
        let mut w_state = AdamState::new(w.as_slice().len(), adam);
        let mut theta_state = AdamState::new(theta.as_slice().len(), adam);
        let mut rng = seeded(cfg.seed, streams::shuffle(l));
        let mut order = train.clone();
        let mut epochs_run = 0;

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let mut batch = chunk.to_vec();
                batch.sort_unstable();
                ledger.begin_batch();
                let xb = gather_rows(&x_hat, &batch)?;
                ledger.alloc_matrix(&xb);
                let targets = data.targets.select(&batch)?;
                let g = layer_objective(&xb, &w, &theta, &targets, cfg.loss_kind, &mut ledger)?;
                ledger.end_batch();
                adam_step(w.as_mut_slice(), g.grad_w.as_slice(), &mut w_state)?;
                adam_step(theta.as_mut_slice(), g.grad_theta.as_slice(), &mut theta_state)?;
                loss_sum += g.loss * batch.len() as f64;
            }
            epochs_run = epoch;
            let train_loss = loss_sum / train.len() as f64;
            let val_f1 = if want_val {
                Some(auxiliary_val_f1(data, &x_hat, &w, &theta)?)
            } else {
                None
            };
            history.push(EpochRecord {
                layer: Some(l),
                epoch,
                train_loss,
                val_f1,
            });
            if let Some(h) = hook.as_deref_mut() {
                let report = EpochReport {
                    layer: l,
                    num_layers,
                    epoch,
                    train_loss,
                    val_f1,
                };
                if h.after_epoch(&report) == HookDecision::Stop {
                    break;
                }
            }
        }
        epochs_per_layer.push(epochs_run);

        let out = affine_relu_forward(&x_hat, &w, &mut ledger)?;
        ledger.free_matrix(&x_hat);
        ledger.free_matrix(&out.pre_activation);
        ledger.record_materialized(out.hidden.byte_size());
        x = out.hidden;
        weights.push(w);
        if l + 1 == num_layers {
            classifier = Some(theta);
        }
    }

    ledger.wall_time_secs = start.elapsed().as_secs_f64();
    let classifier = classifier.expect("last layer sets the classifier");
    Ok(TrainOutcome {
        model: LayerwiseModel::new(weights, classifier)?,
        history,
        ledger,
        epochs_per_layer,
    })
}

/// Micro-F1 on the validation nodes of the current layer and its auxiliary
/// classifier. Uses a scratch ledger so the run's counters are unaffected.
fn auxiliary_val_f1<T: Scalar>(
    data: &TrainingData<T>,
    x_hat: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    theta: &DenseMatrix<T>,
) -> Result<f64, TrainError> {
    let rows = &data.masks.val;
    let xb = gather_rows(x_hat, rows)?;
    let h = matmul(&xb, w)?.map(|v| v.max(T::zero()));
    let logits = matmul(&h, theta)?;
    Ok(score_logits(&logits, &data.labels, rows).0)
}
