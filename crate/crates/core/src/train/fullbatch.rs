use std::time::Instant;

use super::{
    ensure_train_mask, EpochRecord, JointTrainConfig, LayerwiseModel, LossKind, TrainError, TrainOutcome, TrainingData,
};
use crate::ledger::CostLedger;
use crate::tensor::{
    adam_step, affine_relu_backward, affine_relu_forward, gather_rows, linear_backward, linear_forward, spmm,
    spmm_scatter_backward, AdamConfig, AdamState, DenseMatrix, Scalar,
};

#[derive(Debug, Clone)]
pub struct FullbatchGradients<T: Scalar> {
    pub loss: f64,
    pub grad_w: Vec<DenseMatrix<T>>,
    pub grad_theta: DenseMatrix<T>,
}

/// Train-mask loss of the jointly parameterized `L`-layer network evaluated
/// over the whole graph, with analytic gradients for every weight.
pub fn fullbatch_objective<T: Scalar>(
    data: &TrainingData<T>,
    weights: &[DenseMatrix<T>],
    theta: &DenseMatrix<T>,
    loss_kind: LossKind,
    ledger: &mut CostLedger,
) -> Result<FullbatchGradients<T>, TrainError> {
    let n = data.num_nodes();
    let all: Vec<usize> = (0..n).collect();
    let mut x_hats = Vec::with_capacity(weights.len());
    let mut pres = Vec::with_capacity(weights.len());
    let mut x = data.features.clone();
    for w in weights {
        let x_hat = spmm(&data.a_hat, &x, ledger)?;
        let out = affine_relu_forward(&x_hat, w, ledger)?;
        x_hats.push(x_hat);
        pres.push(out.pre_activation);
        x = out.hidden;
    }
    let logits = linear_forward(&x, theta, ledger)?;
    let train = &data.masks.train;
    let out = data
        .targets
        .select(train)?
        .loss(&gather_rows(&logits, train)?, loss_kind)?;
    let mut grad_logits = DenseMatrix::zeros(n, theta.cols());
    for (k, &r) in train.iter().enumerate() {
        grad_logits.row_mut(r).copy_from_slice(out.grad.row(k));
    }
    ledger.alloc_matrix(&grad_logits);

    let (grad_theta, mut grad_h) = linear_backward(&x, theta, &grad_logits, ledger)?;
    let mut grad_w = vec![DenseMatrix::zeros(0, 0); weights.len()];
    for l in (0..weights.len()).rev() {
        let (gw, gx_hat) = affine_relu_backward(&x_hats[l], &weights[l], &pres[l], &grad_h, l > 0, ledger)?;
        grad_w[l] = gw;
        if let Some(gx_hat) = gx_hat {
            grad_h = spmm_scatter_backward(&data.a_hat, &gx_hat, &all, None, ledger)?;
        }
    }
    Ok(FullbatchGradients {
        loss: out.loss,
        grad_w,
        grad_theta,
    })
}

/// Conventional GCN training: every epoch is one Adam step on the full-graph
/// gradient. Aggregates `L` times per epoch.
pub fn train_conventional_fullbatch<T: Scalar>(
    data: &TrainingData<T>,
    cfg: &JointTrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    data.check_loss_kind(cfg.loss_kind)?;
    ensure_train_mask(data)?;
    let start = Instant::now();
    let mut ledger = CostLedger::new();
    let mut model = LayerwiseModel::random(data.feature_dim(), &cfg.hidden_dims, data.class_count, cfg.seed)?;
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut w_states: Vec<AdamState<T>> = model
        .layer_weights()
        .iter()
        .map(|w| AdamState::new(w.as_slice().len(), adam))
        .collect();
    let mut theta_state = AdamState::new(model.classifier().as_slice().len(), adam);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        ledger.begin_batch();
        let g = fullbatch_objective(
            data,
            model.layer_weights(),
            model.classifier(),
            cfg.loss_kind,
            &mut ledger,
        )?;
        ledger.end_batch();
        for ((w, gw), st) in model.layer_weights_mut().iter_mut().zip(&g.grad_w).zip(&mut w_states) {
            adam_step(w.as_mut_slice(), gw.as_slice(), st)?;
        }
        adam_step(
            model.classifier_mut().as_mut_slice(),
            g.grad_theta.as_slice(),
            &mut theta_state,
        )?;
        history.push(EpochRecord {
            layer: None,
            epoch,
            train_loss: g.loss,
            val_f1: None,
        });
    }

    ledger.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        model,
        history,
        ledger,
        epochs_per_layer: vec![cfg.epochs],
    })
}
