use std::time::Instant;

use rand::seq::SliceRandom;

use super::{ensure_train_mask, EpochRecord, JointTrainConfig, LayerwiseModel, TrainError, TrainOutcome, TrainingData};
use crate::graph::NormalizedAdjacency;
use crate::ledger::CostLedger;
use crate::rng::{seeded, streams};
use crate::tensor::{
    adam_step, affine_relu_backward, affine_relu_forward, gather_rows, linear_backward, linear_forward,
    spmm_rows_gathered, spmm_scatter_backward, AdamConfig, AdamState, Scalar,
};

/// Node sets needed to compute `depth` layers for `batch`: entry `depth` is
/// the sorted batch, entry `l - 1` is every node in the `Â`-support of entry
/// `l`. Entry 0 is the full `depth`-hop neighborhood.
pub fn gather_neighborhoods(a_hat: &NormalizedAdjacency, batch: &[usize], depth: usize) -> Vec<Vec<usize>> {
    let mut levels = vec![Vec::new(); depth + 1];
    let mut current = batch.to_vec();
    current.sort_unstable();
    current.dedup();
    levels[depth] = current;
    let mut seen = vec![false; a_hat.n()];
    for l in (0..depth).rev() {
        seen.iter_mut().for_each(|s| *s = false);
        let mut next = Vec::new();
        for &r in &levels[l + 1] {
            for &j in a_hat.matrix().row_indices(r) {
                if !seen[j] {
                    seen[j] = true;
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        levels[l] = next;
    }
    levels
}

/// Vanilla mini-batch GCN: for each batch of train nodes, gathers the full
/// `L`-hop neighborhood (no sampling), propagates layer by layer over it and
/// backpropagates through the gathered subgraph. Aggregates `L` times per
/// batch.
pub fn train_vanilla_minibatch<T: Scalar>(
    data: &TrainingData<T>,
    cfg: &JointTrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    data.check_loss_kind(cfg.loss_kind)?;
    ensure_train_mask(data)?;
    let start = Instant::now();
    let depth = cfg.hidden_dims.len();
    let mut ledger = CostLedger::new();
    let mut model = LayerwiseModel::random(data.feature_dim(), &cfg.hidden_dims, data.class_count, cfg.seed)?;
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut w_states: Vec<AdamState<T>> = model
        .layer_weights()
        .iter()
        .map(|w| AdamState::new(w.as_slice().len(), adam))
        .collect();
    let mut theta_state = AdamState::new(model.classifier().as_slice().len(), adam);
    let mut rng = seeded(cfg.seed, streams::shuffle(0));
    let mut order = data.masks.train.clone();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let levels = gather_neighborhoods(&data.a_hat, chunk, depth);
            ledger.begin_batch();
            let mut x = gather_rows(&data.features, &levels[0])?;
            ledger.alloc_matrix(&x);
            let mut x_hats = Vec::with_capacity(depth);
            let mut pres = Vec::with_capacity(depth);
            for (l, w) in model.layer_weights().iter().enumerate() {
                let x_hat = spmm_rows_gathered(&data.a_hat, &x, &levels[l], &levels[l + 1], &mut ledger)?;
                let out = affine_relu_forward(&x_hat, w, &mut ledger)?;
                x_hats.push(x_hat);
                pres.push(out.pre_activation);
                x = out.hidden;
            }
            let logits = linear_forward(&x, model.classifier(), &mut ledger)?;
            let out = data.targets.select(&levels[depth])?.loss(&logits, cfg.loss_kind)?;
            ledger.alloc_matrix(&out.grad);
            let (grad_theta, mut grad_h) = linear_backward(&x, model.classifier(), &out.grad, &mut ledger)?;
            let mut grad_w = Vec::with_capacity(depth);
            for l in (0..depth).rev() {
                let (gw, gx_hat) = affine_relu_backward(
                    &x_hats[l],
                    &model.layer_weights()[l],
                    &pres[l],
                    &grad_h,
                    l > 0,
                    &mut ledger,
                )?;
                grad_w.push(gw);
                if let Some(gx_hat) = gx_hat {
                    grad_h =
                        spmm_scatter_backward(&data.a_hat, &gx_hat, &levels[l + 1], Some(&levels[l]), &mut ledger)?;
                }
            }
            grad_w.reverse();
            ledger.end_batch();
            for ((w, gw), st) in model.layer_weights_mut().iter_mut().zip(&grad_w).zip(&mut w_states) {
                adam_step(w.as_mut_slice(), gw.as_slice(), st)?;
            }
            adam_step(
                model.classifier_mut().as_mut_slice(),
                grad_theta.as_slice(),
                &mut theta_state,
            )?;
            loss_sum += out.loss * chunk.len() as f64;
        }
        history.push(EpochRecord {
            layer: None,
            epoch,
            train_loss: loss_sum / order.len() as f64,
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
