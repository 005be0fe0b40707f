use serde::{Deserialize, Serialize};

use super::{mismatch, Scalar, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment buffers for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T: Scalar> {
    pub config: AdamConfig,
    pub step_count: u64,
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Scalar>(param: &mut [T], grad: &[T], state: &mut AdamState<T>) -> Result<(), TensorError> {
    if param.len() != grad.len() || param.len() != state.first_moment.len() {
        return Err(mismatch(
            "adam_step",
            format!(
                "param {} / grad {} / state {}",
                param.len(),
                grad.len(),
                state.first_moment.len()
            ),
        ));
    }
    let cfg = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = T::of(1.0 - cfg.beta1.powi(t));
    let bc2 = T::of(1.0 - cfg.beta2.powi(t));
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let (lr, eps) = (T::of(cfg.learning_rate), T::of(cfg.epsilon));
    for (((p, &g), m), v) in param
        .iter_mut()
        .zip(grad)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
