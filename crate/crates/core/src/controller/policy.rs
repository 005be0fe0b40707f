use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Action, ControllerError, RewardConfig};
use crate::rng::{seeded, streams};
use crate::tensor::{adam_step, xavier_init_with, AdamConfig, AdamState, DenseMatrix};

pub const POLICY_VERSION: u32 = 1;
const POLICY_FORMAT: &str = "l2gcn-controller-policy";

/// Trainable tensors of the recurrent cell and its softmax head.
///
/// `h' = tanh(x·w_input + h·w_hidden + b_hidden)`,
/// `π = softmax(h'·w_head + b_head)` over `[continue, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub w_input: DenseMatrix<f64>,
    pub w_hidden: DenseMatrix<f64>,
    pub b_hidden: DenseMatrix<f64>,
    pub w_head: DenseMatrix<f64>,
    pub b_head: DenseMatrix<f64>,
}

impl PolicyParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w_input: DenseMatrix::zeros(input_dim, hidden_dim),
            w_hidden: DenseMatrix::zeros(hidden_dim, hidden_dim),
            b_hidden: DenseMatrix::zeros(1, hidden_dim),
            w_head: DenseMatrix::zeros(hidden_dim, 2),
            b_head: DenseMatrix::zeros(1, 2),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &DenseMatrix<f64>); 5] {
        [
            ("w_input", &self.w_input),
            ("w_hidden", &self.w_hidden),
            ("b_hidden", &self.b_hidden),
            ("w_head", &self.w_head),
            ("b_head", &self.b_head),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut DenseMatrix<f64>); 5] {
        [
            ("w_input", &mut self.w_input),
            ("w_hidden", &mut self.w_hidden),
            ("b_hidden", &mut self.b_hidden),
            ("w_head", &mut self.w_head),
            ("b_head", &mut self.b_head),
        ]
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .all(|((_, a), (_, b))| a.shape() == b.shape())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolicyOptimizer {
    w_input: AdamState<f64>,
    w_hidden: AdamState<f64>,
    b_hidden: AdamState<f64>,
    w_head: AdamState<f64>,
    b_head: AdamState<f64>,
}

impl PolicyOptimizer {
    fn new(params: &PolicyParams, cfg: AdamConfig) -> Self {
        let st = |m: &DenseMatrix<f64>| AdamState::new(m.as_slice().len(), cfg);
        Self {
            w_input: st(&params.w_input),
            w_hidden: st(&params.w_hidden),
            b_hidden: st(&params.b_hidden),
            w_head: st(&params.w_head),
            b_head: st(&params.b_head),
        }
    }

    fn states_mut(&mut self) -> [&mut AdamState<f64>; 5] {
        [
            &mut self.w_input,
            &mut self.w_hidden,
            &mut self.b_hidden,
            &mut self.w_head,
            &mut self.b_head,
        ]
    }

    fn states(&self) -> [&AdamState<f64>; 5] {
        [
            &self.w_input,
            &self.w_hidden,
            &self.b_hidden,
            &self.w_head,
            &self.b_head,
        ]
    }
}

/// Controller inputs for one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub prev_action: Action,
    /// Current epoch loss divided by the loss at this layer's first decision.
    pub loss_ratio: f64,
    pub layer_index: usize,
    pub num_layers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub hidden: Vec<f64>,
    /// Probability of stopping.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerPolicy {
    hidden_dim: usize,
    embed_dim: usize,
    /// Epochs between decisions (`k`).
    pub granularity: usize,
    pub rho_threshold: f64,
    pub reward: RewardConfig,
    params: PolicyParams,
    action_embeddings: DenseMatrix<f64>,
    optimizer: PolicyOptimizer,
    baseline: Option<f64>,
}

impl ControllerPolicy {
    pub const DEFAULT_HIDDEN: usize = 64;
    pub const DEFAULT_EMBED: usize = 32;
    pub const DEFAULT_LR: f64 = 0.05;

    pub fn new(
        hidden_dim: usize,
        embed_dim: usize,
        granularity: usize,
        reward: RewardConfig,
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self, ControllerError> {
        if hidden_dim == 0 || embed_dim == 0 || granularity == 0 {
            return Err(ControllerError::Config(
                "hidden_dim, embed_dim and granularity must be positive".into(),
            ));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(ControllerError::Config(format!(
                "learning rate {learning_rate} must be positive"
            )));
        }
        reward.validate()?;
        let input_dim = embed_dim + 2;
        let mut rng = seeded(seed, streams::CONTROLLER_INIT);
        let params = PolicyParams {
            w_input: xavier_init_with(input_dim, hidden_dim, &mut rng),
            w_hidden: xavier_init_with(hidden_dim, hidden_dim, &mut rng),
            b_hidden: DenseMatrix::zeros(1, hidden_dim),
            w_head: xavier_init_with(hidden_dim, 2, &mut rng),
            b_head: DenseMatrix::zeros(1, 2),
        };
        let mut rng = seeded(seed, streams::CONTROLLER_EMBED);
        let action_embeddings = DenseMatrix::from_fn(2, embed_dim, |_, _| StandardNormal.sample(&mut rng));
        let optimizer = PolicyOptimizer::new(&params, AdamConfig::with_lr(learning_rate));
        Ok(Self {
            hidden_dim,
            embed_dim,
            granularity,
            rho_threshold: 0.5,
            reward,
            params,
            action_embeddings,
            optimizer,
            baseline: None,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut PolicyParams {
        &mut self.params
    }

    pub fn action_embeddings(&self) -> &DenseMatrix<f64> {
        &self.action_embeddings
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub(crate) fn set_baseline(&mut self, b: Option<f64>) {
        self.baseline = b;
    }

    pub fn initial_hidden(&self) -> Vec<f64> {
        vec![0.0; self.hidden_dim]
    }

    /// `[embedding(prev_action), loss_ratio, layer_index / num_layers]`.
    pub fn input_vector(&self, input: &StepInput) -> Result<Vec<f64>, ControllerError> {
        if !input.loss_ratio.is_finite() {
            return Err(ControllerError::NonFinite("loss_ratio"));
        }
        if input.layer_index >= input.num_layers {
            return Err(ControllerError::LayerOutOfRange {
                index: input.layer_index,
                num_layers: input.num_layers,
            });
        }
        let mut x = self.action_embeddings.row(input.prev_action.index()).to_vec();
        x.push(input.loss_ratio);
        x.push(input.layer_index as f64 / input.num_layers as f64);
        Ok(x)
    }

    /// One recurrent update from an already assembled input vector; returns
    /// the new hidden state and `[p_continue, p_stop]`.
    fn cell(params: &PolicyParams, x: &[f64], h: &[f64]) -> (Vec<f64>, [f64; 2]) {
        let hd = params.b_hidden.cols();
        let mut a = params.b_hidden.row(0).to_vec();
        for (i, &xi) in x.iter().enumerate() {
            for (aj, &w) in a.iter_mut().zip(params.w_input.row(i)) {
                *aj += xi * w;
            }
        }
        for (i, &hi) in h.iter().enumerate().take(hd) {
            for (aj, &w) in a.iter_mut().zip(params.w_hidden.row(i)) {
                *aj += hi * w;
            }
        }
        let h_new: Vec<f64> = a.iter().map(|v| v.tanh()).collect();
        let mut z = [params.b_head.get(0, 0), params.b_head.get(0, 1)];
        for (i, &hi) in h_new.iter().enumerate() {
            z[0] += hi * params.w_head.get(i, 0);
            z[1] += hi * params.w_head.get(i, 1);
        }
        let m = z[0].max(z[1]);
        let e = [(z[0] - m).exp(), (z[1] - m).exp()];
        let s = e[0] + e[1];
        (h_new, [e[0] / s, e[1] / s])
    }

    pub fn step(&self, hidden: &[f64], input: &StepInput) -> Result<StepOutput, ControllerError> {
        if hidden.len() != self.hidden_dim {
            return Err(ControllerError::Config(format!(
                "hidden state has {} entries, expected {}",
                hidden.len(),
                self.hidden_dim
            )));
        }
        if hidden.iter().any(|v| !v.is_finite()) {
            return Err(ControllerError::NonFinite("hidden state"));
        }
        let x = self.input_vector(input)?;
        let (h, p) = Self::cell(&self.params, &x, hidden);
        Ok(StepOutput { hidden: h, rho: p[1] })
    }

    /// `Σ_t log π(a_t | s_t)` for a decision sequence starting from the zero
    /// hidden state.
    pub fn sequence_log_prob(&self, inputs: &[Vec<f64>], actions: &[Action]) -> f64 {
        let mut h = self.initial_hidden();
        let mut total = 0.0;
        for (x, a) in inputs.iter().zip(actions) {
            let (h_new, p) = Self::cell(&self.params, x, &h);
            total += p[a.index()].ln();
            h = h_new;
        }
        total
    }

    /// Adds `weight · ∇ Σ_t log π(a_t | s_t)` into `grad` by backpropagation
    /// through time.
    pub fn accumulate_log_prob_grad(
        &self,
        inputs: &[Vec<f64>],
        actions: &[Action],
        weight: f64,
        grad: &mut PolicyParams,
    ) {
        let p = &self.params;
        let hd = self.hidden_dim;
        let mut hs = vec![self.initial_hidden()];
        let mut probs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (h, pr) = Self::cell(p, x, hs.last().expect("nonempty"));
            hs.push(h);
            probs.push(pr);
        }
        let mut dh_next = vec![0.0; hd];
        for t in (0..inputs.len()).rev() {
            let h = &hs[t + 1];
            let h_prev = &hs[t];
            let a = actions[t].index();
            // d log p[a] / dz = onehot(a) - p
            let dz = [
                weight * (f64::from(u8::from(a == 0)) - probs[t][0]),
                weight * (f64::from(u8::from(a == 1)) - probs[t][1]),
            ];
            for (k, &dzk) in dz.iter().enumerate() {
                grad.b_head.set(0, k, grad.b_head.get(0, k) + dzk);
            }
            let mut dh = dh_next.clone();
            for i in 0..hd {
                grad.w_head.set(i, 0, grad.w_head.get(i, 0) + h[i] * dz[0]);
                grad.w_head.set(i, 1, grad.w_head.get(i, 1) + h[i] * dz[1]);
                dh[i] += p.w_head.get(i, 0) * dz[0] + p.w_head.get(i, 1) * dz[1];
            }
            let da: Vec<f64> = dh.iter().zip(h).map(|(&d, &hv)| d * (1.0 - hv * hv)).collect();
            for (j, &daj) in da.iter().enumerate() {
                grad.b_hidden.set(0, j, grad.b_hidden.get(0, j) + daj);
            }
            for (i, &xi) in inputs[t].iter().enumerate() {
                for (g, &daj) in grad.w_input.row_mut(i).iter_mut().zip(&da) {
                    *g += xi * daj;
                }
            }
            for (i, &hp) in h_prev.iter().enumerate() {
                for (g, &daj) in grad.w_hidden.row_mut(i).iter_mut().zip(&da) {
                    *g += hp * daj;
                }
            }
            for (i, d) in dh_next.iter_mut().enumerate() {
                *d = p.w_hidden.row(i).iter().zip(&da).map(|(&w, &daj)| w * daj).sum();
            }
        }
    }

    /// One Adam step descending `grad`.
    pub(crate) fn apply_gradient(&mut self, grad: &PolicyParams) -> Result<(), ControllerError> {
        let states = self.optimizer.states_mut();
        for (((_, param), (_, g)), st) in self.params.tensors_mut().into_iter().zip(grad.tensors()).zip(states) {
            adam_step(param.as_mut_slice(), g.as_slice(), st)?;
        }
        Ok(())
    }

    fn validate_loaded(&self) -> Result<(), String> {
        let input_dim = self.embed_dim + 2;
        let expected = PolicyParams::zeros(input_dim, self.hidden_dim);
        if !self.params.same_shape(&expected) {
            return Err("parameter tensor shapes do not match hidden/embedding sizes".into());
        }
        if self.action_embeddings.shape() != (2, self.embed_dim) {
            return Err("action embedding table has the wrong shape".into());
        }
        for ((name, t), st) in self.params.tensors().into_iter().zip(self.optimizer.states()) {
            if st.first_moment.len() != t.as_slice().len() || st.second_moment.len() != t.as_slice().len() {
                return Err(format!("optimizer state for {name} has the wrong length"));
            }
        }
        if self.granularity == 0 {
            return Err("granularity must be positive".into());
        }
        self.reward.validate().map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[derive(Serialize)]
struct PolicyFileRef<'a> {
    format: &'static str,
    version: u32,
    policy: &'a ControllerPolicy,
}

#[derive(Deserialize)]
struct PolicyFile {
    format: String,
    version: u32,
    policy: serde_json::Value,
}

/// Writes the policy as JSON: `{format, version, policy: {...}}` with every
/// tensor stored as `{rows, cols, data}` in row-major order.
pub fn save_policy(policy: &ControllerPolicy, path: &Path) -> Result<(), ControllerError> {
    let file = PolicyFileRef {
        format: POLICY_FORMAT,
        version: POLICY_VERSION,
        policy,
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| ControllerError::Corrupt {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|source| ControllerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_policy(path: &Path) -> Result<ControllerPolicy, ControllerError> {
    let corrupt = |msg: String| ControllerError::Corrupt {
        path: path.to_path_buf(),
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|source| ControllerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: PolicyFile = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if file.format != POLICY_FORMAT {
        return Err(corrupt(format!("unknown format tag {:?}", file.format)));
    }
    if file.version != POLICY_VERSION {
        return Err(ControllerError::Version {
            found: file.version,
            expected: POLICY_VERSION,
        });
    }
    let policy: ControllerPolicy = serde_json::from_value(file.policy).map_err(|e| corrupt(e.to_string()))?;
    policy.validate_loaded().map_err(corrupt)?;
    Ok(policy)
}
