//! Desk-scale training lab: dense networks with hand-written gradients, the
//! Wasserstein critic and generator objectives, an RMSProp plus weight-clipping
//! training loop, a small distortion-calibration regression, and a
//! receptive-field calculator for convolutional stacks.
//!
//! Capacity is deliberately tiny. What is under test is mechanism: exact
//! reverse-mode gradients (validated against central finite differences),
//! bit-reproducible seeded training, and the invariants a full-scale
//! implementation relies on (clip bounds, loss signs, update directions).

use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::camera::{DistortionCoeffs, DEFAULT_THETA_MAX};
use crate::metrics::KahanSum;

/// Negative-side slope of the leaky rectifier activation.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Exponential decay applied to the squared-gradient accumulator.
pub const RMSPROP_DECAY: f64 = 0.99;
/// Stabilizer added to the accumulator root before dividing.
pub const RMSPROP_EPSILON: f64 = 1e-8;
/// Default critic weight-clipping bound.
pub const DEFAULT_CLIP: f64 = 0.01;
/// Default number of critic updates per generator update.
pub const DEFAULT_N_CRITIC: usize = 5;
/// Default weight on the reconstruction term of the generator objective.
pub const DEFAULT_LAMBDA: f64 = 100.0;
/// Default critic learning rate.
pub const DEFAULT_CRITIC_LR: f64 = 0.0009;
/// Default generator learning rate.
pub const DEFAULT_GEN_LR: f64 = 0.0001;
/// Default minibatch size.
pub const DEFAULT_BATCH: usize = 32;
/// Default weight emphasis on the leading distortion coefficient.
pub const DEFAULT_CALIB_BETA: f64 = 32.0;
/// Fresh parameters are drawn uniformly from `[-INIT_RANGE, INIT_RANGE]`.
pub const INIT_RANGE: f64 = 0.05;
/// Number of fixed field angles sampled for calibration features.
pub const CALIB_FEATURE_COUNT: usize = 16;

/// Errors raised by network construction, training, and the layer parsers.
#[derive(Debug, thiserror::Error)]
pub enum ToyNetError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("score batch is empty")]
    EmptyBatch,
    #[error("forward cache does not match this network")]
    StaleCache,
    #[error("invalid config: {field} {requirement}")]
    InvalidConfig {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite parameters detected at step {step}")]
    Divergence { step: usize, trace: Vec<TraceRow> },
    #[error("dataset has too few samples to split")]
    EmptyDataset,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-layer activation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    LeakyRelu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
        }
    }

    // Derivative at the kink is taken from the right.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
        }
    }
}

/// One fully connected layer: `out = act(W x + b)` with `W` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A stack of dense layers with manual forward and reverse passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

/// Activations recorded by [`DenseNet::forward`], consumed by
/// [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// Pre-activation vectors, one per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activation vectors, one per layer.
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Smallest absolute pre-activation anywhere in the cache. Useful for
    /// keeping finite-difference probes away from activation kinks.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}

/// Gradients of a scalar loss with respect to every parameter of a net.
/// Mirrors the layer structure of the net it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

impl NetGradients {
    /// All-zero gradients shaped like `net`.
    pub fn zeros(net: &DenseNet) -> Self {
        NetGradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    d_weights: vec![0.0; l.weights.len()],
                    d_bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Accumulate `other` into `self` elementwise.
    pub fn add(&mut self, other: &NetGradients) -> Result<(), ToyNetError> {
        if self.layers.len() != other.layers.len() {
            return Err(ToyNetError::DimensionMismatch(
                "gradient layer counts differ".into(),
            ));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.d_weights.len() != b.d_weights.len() || a.d_bias.len() != b.d_bias.len() {
                return Err(ToyNetError::DimensionMismatch(
                    "gradient layer shapes differ".into(),
                ));
            }
            for (x, y) in a.d_weights.iter_mut().zip(&b.d_weights) {
                *x += *y;
            }
            for (x, y) in a.d_bias.iter_mut().zip(&b.d_bias) {
                *x += *y;
            }
        }
        Ok(())
    }
}

impl DenseNet {
    /// Builds a net with the given layer widths and activations, drawing every
    /// parameter uniformly from `[-INIT_RANGE, INIT_RANGE]`.
    ///
    /// `widths` lists the input width followed by each layer's output width,
    /// so `activations.len()` must equal `widths.len() - 1`.
    pub fn with_rng(
        widths: &[usize],
        activations: &[Activation],
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, ToyNetError> {
        if widths.len() < 2 {
            return Err(ToyNetError::InvalidConfig {
                field: "widths",
                requirement: "needs an input width and at least one layer",
            });
        }
        if activations.len() != widths.len() - 1 {
            return Err(ToyNetError::DimensionMismatch(format!(
                "{} activations for {} layers",
                activations.len(),
                widths.len() - 1
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(ToyNetError::InvalidConfig {
                field: "widths",
                requirement: "must all be at least 1",
            });
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (i, &act) in activations.iter().enumerate() {
            let (in_dim, out_dim) = (widths[i], widths[i + 1]);
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
                .collect();
            let bias = (0..out_dim)
                .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights,
                bias,
                activation: act,
            });
        }
        Ok(DenseNet { layers })
    }

    /// Seeded convenience wrapper around [`DenseNet::with_rng`].
    pub fn seeded(
        widths: &[usize],
        activations: &[Activation],
        seed: u64,
    ) -> Result<Self, ToyNetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(widths, activations, &mut rng)
    }

    /// Standard regression shape: leaky-rectified hidden layers, linear head.
    pub fn regression(widths: &[usize], seed: u64) -> Result<Self, ToyNetError> {
        if widths.len() < 2 {
            return Err(ToyNetError::InvalidConfig {
                field: "widths",
                requirement: "needs an input width and at least one layer",
            });
        }
        let mut acts = vec![Activation::LeakyRelu; widths.len() - 1];
        *acts.last_mut().expect("at least one layer") = Activation::Linear;
        Self::seeded(widths, &acts, seed)
    }

    /// Layer widths from input to output, inverse of the `widths` ctor arg.
    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.in_dim).collect();
        if let Some(last) = self.layers.last() {
            w.push(last.out_dim);
        }
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Checks internal consistency: stored shapes match vector lengths and
    /// consecutive layers are dimension compatible. Deserialized nets should
    /// be validated before use.
    pub fn validate(&self) -> Result<(), ToyNetError> {
        if self.layers.is_empty() {
            return Err(ToyNetError::InvalidConfig {
                field: "layers",
                requirement: "must not be empty",
            });
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(ToyNetError::InvalidConfig {
                    field: "layers",
                    requirement: "widths must all be at least 1",
                });
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(ToyNetError::DimensionMismatch(format!(
                    "layer {i} parameter lengths do not match its declared shape"
                )));
            }
            if i + 1 < self.layers.len() && self.layers[i + 1].in_dim != l.out_dim {
                return Err(ToyNetError::DimensionMismatch(format!(
                    "layer {i} output width {} feeds layer {} input width {}",
                    l.out_dim,
                    i + 1,
                    self.layers[i + 1].in_dim
                )));
            }
        }
        Ok(())
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flattens all parameters, layer by layer, weights before bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Writes a flat parameter vector back, inverse of [`Self::flat_params`].
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<(), ToyNetError> {
        if flat.len() != self.param_count() {
            return Err(ToyNetError::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[offset..offset + nw]);
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// Largest absolute parameter value, 0 for an impossible empty net.
    pub fn max_abs_param(&self) -> f64 {
        self.flat_params()
            .iter()
            .fold(0.0f64, |m, p| m.max(p.abs()))
    }

    /// True when every parameter is finite.
    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|p| p.is_finite()))
    }

    /// Affine-plus-activation composition, recording enough state for an
    /// exact reverse pass.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), ToyNetError> {
        if x.len() != self.input_dim() {
            return Err(ToyNetError::DimensionMismatch(format!(
                "input length {} for input width {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for l in &self.layers {
            let mut z = vec![0.0; l.out_dim];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
                let mut acc = l.bias[o];
                for (w, xi) in row.iter().zip(&a) {
                    acc += w * xi;
                }
                *zo = acc;
            }
            let act: Vec<f64> = z.iter().map(|&v| l.activation.apply(v)).collect();
            pre.push(z);
            a = act.clone();
            post.push(act);
        }
        Ok((
            a,
            ForwardCache {
                input: x.to_vec(),
                pre,
                post,
            },
        ))
    }

    /// Reverse-mode pass. `upstream` is dL/d(output); returns dL/d(params)
    /// and dL/d(input). The input gradient is what lets a generator receive
    /// gradient through a downstream critic.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
    ) -> Result<(NetGradients, Vec<f64>), ToyNetError> {
        if cache.pre.len() != self.layers.len()
            || cache.input.len() != self.input_dim()
            || cache
                .pre
                .iter()
                .zip(&self.layers)
                .any(|(z, l)| z.len() != l.out_dim)
        {
            return Err(ToyNetError::StaleCache);
        }
        if upstream.len() != self.output_dim() {
            return Err(ToyNetError::DimensionMismatch(format!(
                "upstream length {} for output width {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let mut grads = NetGradients::zeros(self);
        let mut d_out = upstream.to_vec();
        for (idx, l) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[idx];
            let a_in = if idx == 0 {
                &cache.input
            } else {
                &cache.post[idx - 1]
            };
            // dL/dz = dL/da * act'(z)
            let dz: Vec<f64> = d_out
                .iter()
                .zip(z)
                .map(|(g, &zv)| g * l.activation.derivative(zv))
                .collect();
            let lg = &mut grads.layers[idx];
            for (o, &dzo) in dz.iter().enumerate() {
                lg.d_bias[o] += dzo;
                let row = &mut lg.d_weights[o * l.in_dim..(o + 1) * l.in_dim];
                for (w, xi) in row.iter_mut().zip(a_in) {
                    *w += dzo * xi;
                }
            }
            let mut d_in = vec![0.0; l.in_dim];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &l.weights[o * l.in_dim..(o + 1) * l.in_dim];
                for (di, w) in d_in.iter_mut().zip(row) {
                    *di += dzo * w;
                }
            }
            d_out = d_in;
        }
        Ok((grads, d_out))
    }
}

fn mean(values: &[f64]) -> f64 {
    let mut s = KahanSum::default();
    for &v in values {
        s.add(v);
    }
    s.value() / values.len() as f64
}

/// Wasserstein critic objective: mean real score minus mean fake score.
/// The critic ascends this quantity.
pub fn critic_loss(real_scores: &[f64], fake_scores: &[f64]) -> Result<f64, ToyNetError> {
    if real_scores.is_empty() || fake_scores.is_empty() {
        return Err(ToyNetError::EmptyBatch);
    }
    Ok(mean(real_scores) - mean(fake_scores))
}

/// Adversarial term of the generator objective: negated mean fake score.
/// The generator descends this quantity.
pub fn generator_loss(fake_scores: &[f64]) -> Result<f64, ToyNetError> {
    if fake_scores.is_empty() {
        return Err(ToyNetError::EmptyBatch);
    }
    Ok(-mean(fake_scores))
}

/// Mean absolute difference between a target vector and a prediction.
pub fn l1_loss(y: &[f64], g: &[f64]) -> Result<f64, ToyNetError> {
    if y.len() != g.len() {
        return Err(ToyNetError::DimensionMismatch(format!(
            "target length {} vs prediction length {}",
            y.len(),
            g.len()
        )));
    }
    if y.is_empty() {
        return Err(ToyNetError::EmptyBatch);
    }
    let mut s = KahanSum::default();
    for (a, b) in y.iter().zip(g) {
        s.add((a - b).abs());
    }
    Ok(s.value() / y.len() as f64)
}

/// [`l1_loss`] together with its gradient with respect to the prediction.
/// At an exact tie the subgradient 0 is used.
pub fn l1_loss_grad_wrt_g(y: &[f64], g: &[f64]) -> Result<(f64, Vec<f64>), ToyNetError> {
    let loss = l1_loss(y, g)?;
    let n = y.len() as f64;
    let grad = y
        .iter()
        .zip(g)
        .map(|(a, b)| {
            if b > a {
                1.0 / n
            } else if b < a {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok((loss, grad))
}

/// Full generator objective: adversarial term plus `lambda` times the
/// reconstruction term.
pub fn combined_generator_objective(
    fake_scores: &[f64],
    y: &[f64],
    g: &[f64],
    lambda: f64,
) -> Result<f64, ToyNetError> {
    Ok(generator_loss(fake_scores)? + lambda * l1_loss(y, g)?)
}

fn check_nine(name: &'static str, v: &[f64]) -> Result<(), ToyNetError> {
    if v.len() != 9 {
        return Err(ToyNetError::DimensionMismatch(format!(
            "{name} has length {}, expected 9",
            v.len()
        )));
    }
    Ok(())
}

/// Calibration loss over 9-parameter vectors: a squared error mean that
/// weights the leading coefficient by `beta`,
/// `(beta * d1^2 + d2^2 + .. + d9^2) / 9`.
pub fn weighted_l2(k_pred: &[f64], k_gt: &[f64], beta: f64) -> Result<f64, ToyNetError> {
    check_nine("k_pred", k_pred)?;
    check_nine("k_gt", k_gt)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(ToyNetError::InvalidConfig {
            field: "beta",
            requirement: "must be positive and finite",
        });
    }
    let d0 = k_pred[0] - k_gt[0];
    let mut acc = beta * d0 * d0;
    for i in 1..9 {
        let d = k_pred[i] - k_gt[i];
        acc += d * d;
    }
    Ok(acc / 9.0)
}

/// [`weighted_l2`] together with its gradient with respect to the prediction.
pub fn weighted_l2_grad_wrt_pred(
    k_pred: &[f64],
    k_gt: &[f64],
    beta: f64,
) -> Result<(f64, Vec<f64>), ToyNetError> {
    let loss = weighted_l2(k_pred, k_gt, beta)?;
    let grad = (0..9)
        .map(|i| {
            let w = if i == 0 { beta } else { 1.0 };
            2.0 * w * (k_pred[i] - k_gt[i]) / 9.0
        })
        .collect();
    Ok((loss, grad))
}

/// Whether an optimizer step is added to or subtracted from the parameters.
/// The critic ascends its objective, the generator descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// Squared-gradient accumulators mirroring a net's parameter layout.
#[derive(Debug, Clone)]
pub struct RmsPropState {
    pub layers: Vec<LayerGradients>,
}

impl RmsPropState {
    pub fn zeros(net: &DenseNet) -> Self {
        RmsPropState {
            layers: NetGradients::zeros(net).layers,
        }
    }
}

/// One RMSProp step over a flat parameter slice:
/// `acc = decay * acc + (1 - decay) * g^2`, step `alpha * g / (sqrt(acc) + eps)`.
/// With a constant gradient the accumulator converges to `g^2`, so the step
/// magnitude approaches `alpha` regardless of gradient scale.
pub fn rmsprop_step(
    params: &mut [f64],
    grads: &[f64],
    acc: &mut [f64],
    alpha: f64,
    direction: Direction,
) -> Result<(), ToyNetError> {
    if params.len() != grads.len() || params.len() != acc.len() {
        return Err(ToyNetError::DimensionMismatch(format!(
            "{} params, {} grads, {} accumulators",
            params.len(),
            grads.len(),
            acc.len()
        )));
    }
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
        *a = RMSPROP_DECAY * *a + (1.0 - RMSPROP_DECAY) * g * g;
        *p += sign * alpha * g / (a.sqrt() + RMSPROP_EPSILON);
    }
    Ok(())
}

/// Applies [`rmsprop_step`] to every parameter tensor of a net.
pub fn rmsprop_update(
    net: &mut DenseNet,
    grads: &NetGradients,
    state: &mut RmsPropState,
    alpha: f64,
    direction: Direction,
) -> Result<(), ToyNetError> {
    if net.layers.len() != grads.layers.len() || net.layers.len() != state.layers.len() {
        return Err(ToyNetError::DimensionMismatch(
            "net, gradients, and optimizer state disagree on layer count".into(),
        ));
    }
    for ((l, g), s) in net
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.layers.iter_mut())
    {
        rmsprop_step(&mut l.weights, &g.d_weights, &mut s.d_weights, alpha, direction)?;
        rmsprop_step(&mut l.bias, &g.d_bias, &mut s.d_bias, alpha, direction)?;
    }
    Ok(())
}

/// Clamps every parameter of the net into `[-c, c]`.
pub fn clip_weights(net: &mut DenseNet, c: f64) {
    assert!(c > 0.0, "clip bound must be positive");
    for l in &mut net.layers {
        for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
            *p = p.clamp(-c, c);
        }
    }
}

/// Adversarial training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub critic_lr: f64,
    pub gen_lr: f64,
    /// Critic weight-clipping bound.
    pub clip: f64,
    /// Minibatch size.
    pub batch: usize,
    /// Critic updates per generator update.
    pub n_critic: usize,
    /// Weight on the reconstruction term.
    pub lambda: f64,
    /// Number of generator updates.
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            critic_lr: DEFAULT_CRITIC_LR,
            gen_lr: DEFAULT_GEN_LR,
            clip: DEFAULT_CLIP,
            batch: DEFAULT_BATCH,
            n_critic: DEFAULT_N_CRITIC,
            lambda: DEFAULT_LAMBDA,
            steps: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ToyNetError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.critic_lr) {
            return Err(ToyNetError::InvalidConfig {
                field: "critic_lr",
                requirement: "must be positive and finite",
            });
        }
        if !positive(self.gen_lr) {
            return Err(ToyNetError::InvalidConfig {
                field: "gen_lr",
                requirement: "must be positive and finite",
            });
        }
        if !positive(self.clip) {
            return Err(ToyNetError::InvalidConfig {
                field: "clip",
                requirement: "must be positive and finite",
            });
        }
        if self.batch == 0 {
            return Err(ToyNetError::InvalidConfig {
                field: "batch",
                requirement: "must be at least 1",
            });
        }
        if self.n_critic == 0 {
            return Err(ToyNetError::InvalidConfig {
                field: "n_critic",
                requirement: "must be at least 1",
            });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ToyNetError::InvalidConfig {
                field: "lambda",
                requirement: "must be non-negative and finite",
            });
        }
        Ok(())
    }
}

/// A source of aligned (input, target) vector pairs.
pub trait PairedTask {
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>);
}

/// 1-D benchmark: inputs are standard normal, targets are the same draw
/// shifted by a constant. The ideal generator is the map `x -> x + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTask {
    pub shift: f64,
}

impl PairedTask for ShiftTask {
    fn input_dim(&self) -> usize {
        1
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let x: f64 = rng.sample(StandardNormal);
        (vec![x], vec![x + self.shift])
    }
}

/// One recorded generator step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Critic objective after the last critic update of this step.
    pub critic_loss: f64,
    /// Adversarial term of the generator objective.
    pub generator_loss: f64,
    /// Reconstruction term (unweighted).
    pub l1: f64,
    /// Largest absolute critic parameter after clipping.
    pub max_critic_weight: f64,
}

/// Output of [`train_wgan`].
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub generator: DenseNet,
    pub critic: DenseNet,
    pub trace: Vec<TraceRow>,
}

/// Critic objective and its parameter gradients over concatenated pair
/// batches `d_a` (real pairs) and `d_b` (generated pairs). This is the exact
/// quantity the critic ascends during training.
pub fn critic_loss_gradients(
    critic: &DenseNet,
    d_a: &[Vec<f64>],
    d_b: &[Vec<f64>],
) -> Result<(f64, NetGradients), ToyNetError> {
    if d_a.is_empty() || d_b.is_empty() {
        return Err(ToyNetError::EmptyBatch);
    }
    let mut grads = NetGradients::zeros(critic);
    let mut real = Vec::with_capacity(d_a.len());
    let mut fake = Vec::with_capacity(d_b.len());
    let wa = 1.0 / d_a.len() as f64;
    for x in d_a {
        let (score, cache) = critic.forward(x)?;
        real.push(score[0]);
        let (g, _) = critic.backward(&cache, &[wa])?;
        grads.add(&g)?;
    }
    let wb = -1.0 / d_b.len() as f64;
    for x in d_b {
        let (score, cache) = critic.forward(x)?;
        fake.push(score[0]);
        let (g, _) = critic.backward(&cache, &[wb])?;
        grads.add(&g)?;
    }
    Ok((critic_loss(&real, &fake)?, grads))
}

/// Generator objective (adversarial term plus `lambda` times reconstruction)
/// and its gradients with respect to the generator parameters, with gradient
/// flowing through the fixed critic. Returns `(adversarial, l1, grads)`.
///
/// The reconstruction term is the mean absolute error over every element of
/// the batch, so each element contributes `1 / (m * dim)` to the gradient.
pub fn generator_objective_gradients(
    gen: &DenseNet,
    critic: &DenseNet,
    x_a: &[Vec<f64>],
    y: &[Vec<f64>],
    lambda: f64,
) -> Result<(f64, f64, NetGradients), ToyNetError> {
    if x_a.is_empty() || x_a.len() != y.len() {
        return Err(ToyNetError::DimensionMismatch(format!(
            "{} inputs vs {} targets",
            x_a.len(),
            y.len()
        )));
    }
    let m = x_a.len() as f64;
    let dim = gen.output_dim() as f64;
    let mut grads = NetGradients::zeros(gen);
    let mut scores = Vec::with_capacity(x_a.len());
    let mut abs_err = KahanSum::default();
    for (x, target) in x_a.iter().zip(y) {
        if target.len() != gen.output_dim() {
            return Err(ToyNetError::DimensionMismatch(format!(
                "target length {} for generator output width {}",
                target.len(),
                gen.output_dim()
            )));
        }
        let (g_out, gen_cache) = gen.forward(x)?;
        let mut pair = x.clone();
        pair.extend_from_slice(&g_out);
        let (score, critic_cache) = critic.forward(&pair)?;
        scores.push(score[0]);
        // Adversarial upstream: d(-mean scores)/d(score) = -1/m, pushed back
        // through the critic to the generated half of its input.
        let (_, d_pair) = critic.backward(&critic_cache, &[-1.0 / m])?;
        let mut d_g = d_pair[x.len()..].to_vec();
        for ((dg, out), tgt) in d_g.iter_mut().zip(&g_out).zip(target) {
            abs_err.add((tgt - out).abs());
            let sub = if out > tgt {
                1.0
            } else if out < tgt {
                -1.0
            } else {
                0.0
            };
            *dg += lambda * sub / (m * dim);
        }
        let (g, _) = gen.backward(&gen_cache, &d_g)?;
        grads.add(&g)?;
    }
    let adversarial = generator_loss(&scores)?;
    let l1 = abs_err.value() / (m * dim);
    Ok((adversarial, l1, grads))
}

/// Adversarial training loop: per generator step, `n_critic` critic updates
/// (score real and generated concatenated pairs, ascend the critic objective,
/// clip), then one generator update descending the combined objective.
/// Single-threaded and bit-reproducible for a given seed and config.
pub fn train_wgan(
    generator: DenseNet,
    critic: DenseNet,
    task: &dyn PairedTask,
    cfg: &TrainConfig,
) -> Result<TrainResult, ToyNetError> {
    cfg.validate()?;
    generator.validate()?;
    critic.validate()?;
    let pair_dim = task.input_dim() + task.target_dim();
    if generator.input_dim() != task.input_dim() || generator.output_dim() != task.target_dim() {
        return Err(ToyNetError::DimensionMismatch(format!(
            "generator is {}->{} but the task is {}->{}",
            generator.input_dim(),
            generator.output_dim(),
            task.input_dim(),
            task.target_dim()
        )));
    }
    if critic.input_dim() != pair_dim || critic.output_dim() != 1 {
        return Err(ToyNetError::DimensionMismatch(format!(
            "critic is {}->{} but concatenated pairs have width {}",
            critic.input_dim(),
            critic.output_dim(),
            pair_dim
        )));
    }

    let mut gen = generator;
    let mut critic = critic;
    let mut gen_state = RmsPropState::zeros(&gen);
    let mut critic_state = RmsPropState::zeros(&critic);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace: Vec<TraceRow> = Vec::with_capacity(cfg.steps);

    let sample_batch = |rng: &mut ChaCha8Rng| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut xs = Vec::with_capacity(cfg.batch);
        let mut ys = Vec::with_capacity(cfg.batch);
        for _ in 0..cfg.batch {
            let (x, y) = task.sample_pair(rng);
            xs.push(x);
            ys.push(y);
        }
        (xs, ys)
    };

    for step in 0..cfg.steps {
        let mut last_critic_loss = 0.0;
        for _ in 0..cfg.n_critic {
            let (xs, ys) = sample_batch(&mut rng);
            let mut d_a = Vec::with_capacity(cfg.batch);
            let mut d_b = Vec::with_capacity(cfg.batch);
            for (x, y) in xs.iter().zip(&ys) {
                let (g_out, _) = gen.forward(x)?;
                let mut real_pair = x.clone();
                real_pair.extend_from_slice(y);
                let mut fake_pair = x.clone();
                fake_pair.extend_from_slice(&g_out);
                d_a.push(real_pair);
                d_b.push(fake_pair);
            }
            let (loss, grads) = critic_loss_gradients(&critic, &d_a, &d_b)?;
            last_critic_loss = loss;
            rmsprop_update(&mut critic, &grads, &mut critic_state, cfg.critic_lr, Direction::Ascend)?;
            if !critic.all_finite() {
                return Err(ToyNetError::Divergence { step, trace });
            }
            clip_weights(&mut critic, cfg.clip);
            // Clip post-condition, cheap enough to keep on in release builds.
            assert!(
                critic.max_abs_param() <= cfg.clip,
                "critic parameter escaped the clip bound"
            );
        }

        let (xs, ys) = sample_batch(&mut rng);
        let (adversarial, l1, grads) =
            generator_objective_gradients(&gen, &critic, &xs, &ys, cfg.lambda)?;
        rmsprop_update(&mut gen, &grads, &mut gen_state, cfg.gen_lr, Direction::Descend)?;
        if !gen.all_finite() {
            return Err(ToyNetError::Divergence { step, trace });
        }

        trace.push(TraceRow {
            step,
            critic_loss: last_critic_loss,
            generator_loss: adversarial,
            l1,
            max_critic_weight: critic.max_abs_param(),
        });
    }

    Ok(TrainResult {
        generator: gen,
        critic,
        trace,
    })
}

/// Mean of `G(x) - x` over seeded standard-normal draws. Measures how far a
/// 1-D generator shifts its input distribution.
pub fn measure_mean_shift(gen: &DenseNet, samples: usize, seed: u64) -> Result<f64, ToyNetError> {
    if gen.input_dim() != 1 || gen.output_dim() != 1 {
        return Err(ToyNetError::DimensionMismatch(format!(
            "mean shift needs a 1->1 net, got {}->{}",
            gen.input_dim(),
            gen.output_dim()
        )));
    }
    if samples == 0 {
        return Err(ToyNetError::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = KahanSum::default();
    for _ in 0..samples {
        let x: f64 = rng.sample(StandardNormal);
        let (out, _) = gen.forward(&[x])?;
        s.add(out[0] - x);
    }
    Ok(s.value() / samples as f64)
}

/// Fixed desk-scale budget for the 1-D shift benchmark. The critic keeps the
/// stated default learning rate; the generator rate is raised so the run
/// converges in a couple of thousand steps instead of tens of thousands.
pub fn shift_benchmark_config(seed: u64) -> TrainConfig {
    TrainConfig {
        critic_lr: DEFAULT_CRITIC_LR,
        gen_lr: 0.003,
        steps: 2000,
        seed,
        ..TrainConfig::default()
    }
}

/// Fresh generator and critic sized for [`ShiftTask`], seeded independently.
pub fn shift_benchmark_nets(seed: u64) -> (DenseNet, DenseNet) {
    let gen = DenseNet::regression(&[1, 16, 16, 1], seed ^ 0x67656e).expect("static widths");
    let critic = DenseNet::regression(&[2, 16, 16, 1], seed ^ 0x637274).expect("static widths");
    (gen, critic)
}

/// Writes a loss trace as CSV with columns `step,L_D,L_G,L1`.
pub fn write_loss_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), ToyNetError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "step,L_D,L_G,L1")?;
    for row in trace {
        writeln!(
            out,
            "{},{},{},{}",
            row.step, row.critic_loss, row.generator_loss, row.l1
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Serializes a net as pretty JSON.
pub fn save_net_json(path: &Path, net: &DenseNet) -> Result<(), ToyNetError> {
    let mut text = serde_json::to_string_pretty(net)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads and validates a net written by [`save_net_json`].
pub fn load_net_json(path: &Path) -> Result<DenseNet, ToyNetError> {
    let text = std::fs::read_to_string(path)?;
    let net: DenseNet = serde_json::from_str(&text)?;
    net.validate()?;
    Ok(net)
}

/// Weighted squared-error objective of a regression net at one sample,
/// with parameter gradients. Shared by training and the gradient checks.
pub fn weighted_l2_gradients(
    net: &DenseNet,
    features: &[f64],
    label: &[f64],
    beta: f64,
) -> Result<(f64, NetGradients), ToyNetError> {
    let (pred, cache) = net.forward(features)?;
    let (loss, d_pred) = weighted_l2_grad_wrt_pred(&pred, label, beta)?;
    let (grads, _) = net.backward(&cache, &d_pred)?;
    Ok((loss, grads))
}

/// Weight on the leading-coefficient term of the calibration loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibLossConfig {
    pub beta: f64,
}

impl Default for CalibLossConfig {
    fn default() -> Self {
        CalibLossConfig {
            beta: DEFAULT_CALIB_BETA,
        }
    }
}

impl CalibLossConfig {
    pub fn validate(&self) -> Result<(), ToyNetError> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(ToyNetError::InvalidConfig {
                field: "beta",
                requirement: "must be positive and finite",
            });
        }
        Ok(())
    }
}

/// One calibration example: a radial displacement profile and the 9-vector
/// it was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibSample {
    pub features: Vec<f64>,
    pub label: Vec<f64>,
}

/// Which label dimensions vary across a generated calibration dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibFamily {
    /// Only the leading coefficient varies; the rest are fixed constants.
    /// The features then determine the leading coefficient analytically.
    K1Only,
    /// All five polynomial coefficients vary (admissibility enforced).
    AllCoefficients,
}

/// The fixed field angles at which calibration features sample the radial
/// displacement curve: evenly spaced over `(0, theta_max]`.
pub fn calib_feature_thetas(theta_max: f64) -> [f64; CALIB_FEATURE_COUNT] {
    let mut t = [0.0; CALIB_FEATURE_COUNT];
    for (j, v) in t.iter_mut().enumerate() {
        *v = theta_max * (j + 1) as f64 / CALIB_FEATURE_COUNT as f64;
    }
    t
}

/// The radial displacement profile of a coefficient set: the distorted
/// radius evaluated at each fixed field angle.
pub fn radial_features(coeffs: &DistortionCoeffs, theta_max: f64) -> [f64; CALIB_FEATURE_COUNT] {
    let mut out = [0.0; CALIB_FEATURE_COUNT];
    for (f, theta) in out.iter_mut().zip(calib_feature_thetas(theta_max)) {
        *f = coeffs.radius(theta);
    }
    out
}

// Normalized intrinsics used as the constant tail of every calibration label:
// unit focal lengths and a centered principal point.
const CALIB_INTRINSICS: [f64; 4] = [1.0, 1.0, 0.5, 0.5];

/// Generates a seeded calibration dataset. Labels are 9-vectors: the five
/// polynomial coefficients followed by normalized intrinsics.
pub fn make_calib_dataset(n: usize, family: CalibFamily, seed: u64) -> Vec<CalibSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed_tail = [0.03, 0.012, 0.005, 0.002];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k1 = rng.gen_range(0.6..=1.1);
        let k = match family {
            CalibFamily::K1Only => [
                k1,
                fixed_tail[0],
                fixed_tail[1],
                fixed_tail[2],
                fixed_tail[3],
            ],
            CalibFamily::AllCoefficients => [
                k1,
                rng.gen_range(-0.02..=0.05),
                rng.gen_range(-0.02..=0.05),
                rng.gen_range(-0.02..=0.05),
                rng.gen_range(-0.02..=0.05),
            ],
        };
        let coeffs = DistortionCoeffs::new(k).expect("sampled coefficients are finite");
        if !coeffs.is_admissible(DEFAULT_THETA_MAX) {
            continue;
        }
        let features = radial_features(&coeffs, DEFAULT_THETA_MAX).to_vec();
        let mut label = k.to_vec();
        label.extend_from_slice(&CALIB_INTRINSICS);
        out.push(CalibSample { features, label });
    }
    out
}

/// Calibration training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for CalibConfig {
    fn default() -> Self {
        CalibConfig {
            lr: 0.001,
            batch: 16,
            epochs: 150,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl CalibConfig {
    pub fn validate(&self) -> Result<(), ToyNetError> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(ToyNetError::InvalidConfig {
                field: "lr",
                requirement: "must be positive and finite",
            });
        }
        if self.batch == 0 {
            return Err(ToyNetError::InvalidConfig {
                field: "batch",
                requirement: "must be at least 1",
            });
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ToyNetError::InvalidConfig {
                field: "train_fraction",
                requirement: "must lie strictly between 0 and 1",
            });
        }
        Ok(())
    }
}

/// Seeded train/heldout index split. The permutation depends only on `n` and
/// `seed`; both sides are guaranteed non-empty.
pub fn calib_split(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ToyNetError> {
    if n < 2 {
        return Err(ToyNetError::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x73706c6974);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let train_len = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let held = order.split_off(train_len);
    Ok((order, held))
}

/// Heldout quality of a calibration net: mean absolute error on the leading
/// coefficient, plus the mean weighted squared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibScore {
    pub mean_abs_k1_error: f64,
    pub mean_weighted_l2: f64,
    pub n: usize,
}

/// Evaluates a calibration net over a sample slice.
pub fn evaluate_calibration(
    net: &DenseNet,
    samples: &[CalibSample],
    beta: f64,
) -> Result<CalibScore, ToyNetError> {
    if samples.is_empty() {
        return Err(ToyNetError::EmptyDataset);
    }
    let mut abs_k1 = KahanSum::default();
    let mut wl2 = KahanSum::default();
    for s in samples {
        let (pred, _) = net.forward(&s.features)?;
        abs_k1.add((pred[0] - s.label[0]).abs());
        wl2.add(weighted_l2(&pred, &s.label, beta)?);
    }
    Ok(CalibScore {
        mean_abs_k1_error: abs_k1.value() / samples.len() as f64,
        mean_weighted_l2: wl2.value() / samples.len() as f64,
        n: samples.len(),
    })
}

/// Output of [`calibrate_toy`].
#[derive(Debug, Clone)]
pub struct CalibResult {
    pub net: DenseNet,
    pub score: CalibScore,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

// Layer widths of the calibration regressor.
const CALIB_WIDTHS: [usize; 4] = [CALIB_FEATURE_COUNT, 32, 16, 9];

/// Trains a small regressor from radial displacement profiles to 9-parameter
/// vectors under the weighted squared-error loss, then reports heldout
/// quality. Deterministic for a given dataset, config, and loss config.
pub fn calibrate_toy(
    dataset: &[CalibSample],
    cfg: &CalibConfig,
    loss_cfg: &CalibLossConfig,
) -> Result<CalibResult, ToyNetError> {
    cfg.validate()?;
    loss_cfg.validate()?;
    for s in dataset {
        if s.features.len() != CALIB_FEATURE_COUNT || s.label.len() != 9 {
            return Err(ToyNetError::DimensionMismatch(format!(
                "sample has {} features and {} label entries, expected {} and 9",
                s.features.len(),
                s.label.len(),
                CALIB_FEATURE_COUNT
            )));
        }
    }
    let (train_idx, held_idx) = calib_split(dataset.len(), cfg.train_fraction, cfg.seed)?;

    let mut net = DenseNet::regression(&CALIB_WIDTHS, cfg.seed ^ 0x63616c6962)?;
    let mut state = RmsPropState::zeros(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x74726e);
    let mut order = train_idx;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = KahanSum::default();
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let scale = 1.0 / chunk.len() as f64;
            let mut grads = NetGradients::zeros(&net);
            let mut batch_loss = KahanSum::default();
            for &i in chunk {
                let s = &dataset[i];
                let (loss, mut g) =
                    weighted_l2_gradients(&net, &s.features, &s.label, loss_cfg.beta)?;
                batch_loss.add(loss);
                for l in &mut g.layers {
                    for v in l.d_weights.iter_mut().chain(l.d_bias.iter_mut()) {
                        *v *= scale;
                    }
                }
                grads.add(&g)?;
            }
            rmsprop_update(&mut net, &grads, &mut state, cfg.lr, Direction::Descend)?;
            epoch_loss.add(batch_loss.value() * scale);
            batches += 1;
        }
        if !net.all_finite() {
            return Err(ToyNetError::Divergence {
                step: epoch,
                trace: Vec::new(),
            });
        }
        epoch_losses.push(epoch_loss.value() / batches.max(1) as f64);
    }

    let held: Vec<CalibSample> = held_idx.iter().map(|&i| dataset[i].clone()).collect();
    let score = evaluate_calibration(&net, &held, loss_cfg.beta)?;
    Ok(CalibResult {
        net,
        score,
        epoch_losses,
    })
}

/// One convolutional layer for receptive-field arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub kernel: u64,
    pub stride: u64,
    pub padding: u64,
    pub channels: u64,
}

impl ConvLayerSpec {
    pub fn validate(&self) -> Result<(), ToyNetError> {
        if self.kernel == 0 {
            return Err(ToyNetError::InvalidSpec("kernel must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(ToyNetError::InvalidSpec("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Receptive field of each layer in a stack under the standard recurrence
/// `rf_l = rf_{l-1} + (k_l - 1) * jump_{l-1}`, `jump_l = jump_{l-1} * s_l`,
/// starting from `rf_0 = jump_0 = 1`. Padding affects spatial size, not the
/// receptive field, so it is accepted but unused here.
pub fn receptive_field(stack: &[ConvLayerSpec]) -> Result<Vec<u64>, ToyNetError> {
    if stack.is_empty() {
        return Err(ToyNetError::InvalidSpec("layer stack is empty".into()));
    }
    let mut rf: u64 = 1;
    let mut jump: u64 = 1;
    let mut out = Vec::with_capacity(stack.len());
    for spec in stack {
        spec.validate()?;
        rf = (spec.kernel - 1)
            .checked_mul(jump)
            .and_then(|g| rf.checked_add(g))
            .ok_or_else(|| ToyNetError::InvalidSpec("receptive field overflows u64".into()))?;
        jump = jump
            .checked_mul(spec.stride)
            .ok_or_else(|| ToyNetError::InvalidSpec("stride product overflows u64".into()))?;
        out.push(rf);
    }
    Ok(out)
}

/// A well-known bookkeeping trap for five-layer 4x4 critics: with stride 2 in
/// every layer the receptive field reaches 94, yet such stacks are widely
/// quoted as 70-pixel critics. The quoted 70 corresponds to strides
/// 2,2,2,1,1. Returns the caveat when the given stack is the all-stride-2
/// variant, so callers can surface it instead of silently correcting either
/// number.
pub fn stride_discrepancy_note(stack: &[ConvLayerSpec]) -> Option<String> {
    if stack.len() == 5 && stack.iter().all(|l| l.kernel == 4 && l.stride == 2) {
        Some(
            "five 4x4 stride-2 layers reach a receptive field of 94; the 70 often quoted \
             for this shape corresponds to strides 2,2,2,1,1"
                .to_string(),
        )
    } else {
        None
    }
}

/// Parses one layer from the `KxKsS` mini grammar with optional `pP` padding
/// suffix, for example `4x4s2p1` or `3x3s1`. Padding defaults to 1. Kernels
/// must be square.
pub fn parse_layer_spec(text: &str) -> Result<ConvLayerSpec, ToyNetError> {
    let bad = || ToyNetError::InvalidSpec(format!("`{text}` (expected KxKsS or KxKsSpP)"));
    let (k1, rest) = text.split_once('x').ok_or_else(bad)?;
    let (k2, rest) = rest.split_once('s').ok_or_else(bad)?;
    let (stride_text, padding_text) = match rest.split_once('p') {
        Some((s, p)) => (s, Some(p)),
        None => (rest, None),
    };
    let parse = |s: &str| s.parse::<u64>().map_err(|_| bad());
    let ka = parse(k1)?;
    let kb = parse(k2)?;
    if ka != kb {
        return Err(ToyNetError::InvalidSpec(format!(
            "`{text}` (only square kernels are supported)"
        )));
    }
    let spec = ConvLayerSpec {
        kernel: ka,
        stride: parse(stride_text)?,
        padding: padding_text.map(parse).transpose()?.unwrap_or(1),
        channels: 1,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses a comma-separated stack of layer specs.
pub fn parse_layer_stack(text: &str) -> Result<Vec<ConvLayerSpec>, ToyNetError> {
    if text.trim().is_empty() {
        return Err(ToyNetError::InvalidSpec("layer stack is empty".into()));
    }
    text.split(',').map(|t| parse_layer_spec(t.trim())).collect()
}
