//! Bidirectional LSTM sequence regression.
//!
//! Two stacked bidirectional layers feed a linear output unit. Each layer
//! runs an independent forward-time and backward-time LSTM over its input
//! and concatenates the two hidden sequences per timestep. Cells are
//! standard (input/forget/output gates, tanh activations, no peepholes);
//! the output is linear with no squashing, since targets are standardized.
//!
//! Training minimizes the sum of squared errors with per-sequence
//! stochastic gradient descent plus momentum, in a fixed sequence order.
//! Gaussian noise is added to the training inputs (never the targets),
//! re-sampled each epoch from a random stream independent of weight
//! initialization. Early stopping tracks validation SSE and returns the
//! parameters of the best epoch. Everything is deterministic given the
//! configured seed: weight init, noise, and update order.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::alignment::Standardizer;
use crate::stream_seed;

/// Default experiment seed, shared by weight init, input noise, and the
/// feature filter's tie-breaking jitter.
pub const DEFAULT_SEED: u64 = 1_787_452_436;

/// Random-stream namespace for weight initialization.
const INIT_STREAM: u64 = 0;
/// Random-stream namespace for per-epoch input noise (the low word is the
/// epoch number, so every epoch draws fresh noise).
const NOISE_STREAM_BASE: u64 = 1 << 32;

/// Errors from network construction, evaluation, and training.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
    #[error("training diverged to a non-finite loss at epoch {epoch}, sequence {sequence}")]
    DivergedToNonFinite { epoch: usize, sequence: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("prediction requires an attached standardizer")]
    StandardizerMissing,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn default_hidden_sizes() -> Vec<usize> {
    vec![40, 30]
}
fn default_learning_rate() -> f64 {
    1e-5
}
fn default_momentum() -> f64 {
    0.9
}
fn default_noise_std() -> f64 {
    0.1
}
fn default_max_epochs() -> usize {
    100
}
fn default_patience() -> usize {
    10
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_output_dim() -> usize {
    1
}
fn default_init_range() -> f64 {
    0.1
}
fn default_gradient_clip() -> f64 {
    5.0
}

/// Network and optimizer settings. `input_dim` is data-dependent (the
/// post-filter feature count) and is usually filled in per configuration;
/// everything else has pipeline defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub input_dim: usize,
    #[serde(default = "default_hidden_sizes")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dim")]
    pub output_dim: usize,
    /// Weights start uniform in (-init_range, init_range).
    #[serde(default = "default_init_range")]
    pub init_range: f64,
    /// Per-sequence gradient L2 clip; guards lr/seed combinations that
    /// would otherwise blow up early.
    #[serde(default = "default_gradient_clip")]
    pub gradient_clip: f64,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_sizes: default_hidden_sizes(),
            learning_rate: default_learning_rate(),
            momentum: default_momentum(),
            noise_std: default_noise_std(),
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            seed: default_seed(),
            output_dim: default_output_dim(),
            init_range: default_init_range(),
            gradient_clip: default_gradient_clip(),
        }
    }

    // Negated comparisons double as NaN rejection.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 {
            return Err(ModelError::InvalidConfig("input_dim must be at least 1".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(ModelError::InvalidConfig(format!(
                "hidden_sizes must all be positive, got {:?}",
                self.hidden_sizes
            )));
        }
        if self.output_dim != 1 {
            return Err(ModelError::InvalidConfig(format!(
                "only a single regression output is supported, got output_dim {}",
                self.output_dim
            )));
        }
        if !(self.learning_rate >= 0.0) || !(self.noise_std >= 0.0) {
            return Err(ModelError::InvalidConfig(
                "learning_rate and noise_std must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ModelError::InvalidConfig(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.max_epochs == 0 || self.patience == 0 || self.patience > self.max_epochs {
            return Err(ModelError::InvalidConfig(format!(
                "need 1 <= patience <= max_epochs, got patience {} with max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.init_range > 0.0) || !(self.gradient_clip > 0.0) {
            return Err(ModelError::InvalidConfig(
                "init_range and gradient_clip must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One direction of one layer. Weight rows are the four gates stacked in
/// blocks of the hidden size, in the order input, forget, candidate,
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmDirection {
    /// `4H x D_in`
    pub w_input: Array2<f64>,
    /// `4H x H`
    pub w_recurrent: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

impl LstmDirection {
    fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_input: Array2::zeros((4 * hidden, input_dim)),
            w_recurrent: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    fn hidden_size(&self) -> usize {
        self.w_recurrent.ncols()
    }

    fn scale(&mut self, a: f64) {
        self.w_input.mapv_inplace(|v| v * a);
        self.w_recurrent.mapv_inplace(|v| v * a);
        self.bias.mapv_inplace(|v| v * a);
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        self.w_input.zip_mut_with(&other.w_input, |x, &y| *x += a * y);
        self.w_recurrent.zip_mut_with(&other.w_recurrent, |x, &y| *x += a * y);
        self.bias.zip_mut_with(&other.bias, |x, &y| *x += a * y);
    }

    fn sq_norm(&self) -> f64 {
        self.w_input.iter().map(|v| v * v).sum::<f64>()
            + self.w_recurrent.iter().map(|v| v * v).sum::<f64>()
            + self.bias.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Both directions of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub forward: LstmDirection,
    pub backward: LstmDirection,
}

/// All trainable weights. Acts as a vector space for the optimizer, the
/// gradient, and finite-difference checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetWeights {
    pub layers: Vec<LstmLayer>,
    /// `output_dim x 2H_last`
    pub output_weight: Array2<f64>,
    /// `output_dim`
    pub output_bias: Array1<f64>,
}

impl NetWeights {
    fn zeros(config: &ModelConfig) -> Self {
        let mut layers = Vec::new();
        let mut d_in = config.input_dim;
        for &h in &config.hidden_sizes {
            layers.push(LstmLayer {
                forward: LstmDirection::zeros(d_in, h),
                backward: LstmDirection::zeros(d_in, h),
            });
            d_in = 2 * h;
        }
        Self {
            layers,
            output_weight: Array2::zeros((config.output_dim, d_in)),
            output_bias: Array1::zeros(config.output_dim),
        }
    }

    fn input_dim(&self) -> usize {
        self.layers[0].forward.w_input.ncols()
    }

    pub fn scale(&mut self, a: f64) {
        for layer in &mut self.layers {
            layer.forward.scale(a);
            layer.backward.scale(a);
        }
        self.output_weight.mapv_inplace(|v| v * a);
        self.output_bias.mapv_inplace(|v| v * a);
    }

    /// `self += a * other` (elementwise over every weight).
    pub fn scaled_add(&mut self, a: f64, other: &Self) {
        for (layer, o) in self.layers.iter_mut().zip(&other.layers) {
            layer.forward.scaled_add(a, &o.forward);
            layer.backward.scaled_add(a, &o.backward);
        }
        self.output_weight.zip_mut_with(&other.output_weight, |x, &y| *x += a * y);
        self.output_bias.zip_mut_with(&other.output_bias, |x, &y| *x += a * y);
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.forward.sq_norm() + l.backward.sq_norm())
            .sum::<f64>()
            + self.output_weight.iter().map(|v| v * v).sum::<f64>()
            + self.output_bias.iter().map(|v| v * v).sum::<f64>()
    }

    /// All weights in a fixed order (layers bottom-up, forward then
    /// backward direction, input/recurrent/bias, then the output unit).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for dir in [&layer.forward, &layer.backward] {
                out.extend(dir.w_input.iter());
                out.extend(dir.w_recurrent.iter());
                out.extend(dir.bias.iter());
            }
        }
        out.extend(self.output_weight.iter());
        out.extend(self.output_bias.iter());
        out
    }

    /// Inverse of [`NetWeights::flatten`]; panics on length mismatch.
    pub fn load_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for layer in &mut self.layers {
            for dir in [&mut layer.forward, &mut layer.backward] {
                for v in dir.w_input.iter_mut() {
                    *v = *it.next().expect("flat vector too short");
                }
                for v in dir.w_recurrent.iter_mut() {
                    *v = *it.next().expect("flat vector too short");
                }
                for v in dir.bias.iter_mut() {
                    *v = *it.next().expect("flat vector too short");
                }
            }
        }
        for v in self.output_weight.iter_mut() {
            *v = *it.next().expect("flat vector too short");
        }
        for v in self.output_bias.iter_mut() {
            *v = *it.next().expect("flat vector too short");
        }
        assert!(it.next().is_none(), "flat vector too long");
    }
}

/// Trained (or freshly initialized) model: weights, their configuration,
/// and the standardizer that maps between feature/label units and network
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub config: ModelConfig,
    pub weights: NetWeights,
    pub standardizer: Option<Standardizer>,
}

impl ModelParameters {
    pub fn with_standardizer(mut self, standardizer: Standardizer) -> Self {
        self.standardizer = Some(standardizer);
        self
    }

    /// Serializes to JSON; `serde_json` round-trips every f64 bit-exactly,
    /// so a reloaded model predicts identically.
    pub fn save_json<P: AsRef<Path>>(&self, path: P) -> Result<(), ModelError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json<P: AsRef<Path>>(path: P) -> Result<Self, ModelError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

fn draw(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-range..range)).collect()
}

fn random_direction(rng: &mut ChaCha8Rng, input_dim: usize, h: usize, range: f64) -> LstmDirection {
    LstmDirection {
        w_input: Array2::from_shape_vec((4 * h, input_dim), draw(rng, 4 * h * input_dim, range))
            .expect("shape matches draw count"),
        w_recurrent: Array2::from_shape_vec((4 * h, h), draw(rng, 4 * h * h, range))
            .expect("shape matches draw count"),
        bias: Array1::from_vec(draw(rng, 4 * h, range)),
    }
}

/// Fresh weights, uniform in (-init_range, init_range), drawn from a
/// counter-based stream in a fixed order: identical configs give
/// bit-identical parameters.
pub fn init(config: &ModelConfig) -> Result<ModelParameters, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, INIT_STREAM));
    let mut layers = Vec::new();
    let mut d_in = config.input_dim;
    for &h in &config.hidden_sizes {
        let forward = random_direction(&mut rng, d_in, h, config.init_range);
        let backward = random_direction(&mut rng, d_in, h, config.init_range);
        layers.push(LstmLayer { forward, backward });
        d_in = 2 * h;
    }
    let output_weight = Array2::from_shape_vec(
        (config.output_dim, d_in),
        draw(&mut rng, config.output_dim * d_in, config.init_range),
    )
    .expect("shape matches draw count");
    let output_bias = Array1::from_vec(draw(&mut rng, config.output_dim, config.init_range));
    Ok(ModelParameters {
        config: config.clone(),
        weights: NetWeights { layers, output_weight, output_bias },
        standardizer: None,
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-timestep activations of one direction, all `T x H`.
struct DirTrace {
    gate_i: Array2<f64>,
    gate_f: Array2<f64>,
    gate_g: Array2<f64>,
    gate_o: Array2<f64>,
    cell: Array2<f64>,
    tanh_cell: Array2<f64>,
    hidden: Array2<f64>,
}

impl DirTrace {
    fn zeros(t_len: usize, h: usize) -> Self {
        Self {
            gate_i: Array2::zeros((t_len, h)),
            gate_f: Array2::zeros((t_len, h)),
            gate_g: Array2::zeros((t_len, h)),
            gate_o: Array2::zeros((t_len, h)),
            cell: Array2::zeros((t_len, h)),
            tanh_cell: Array2::zeros((t_len, h)),
            hidden: Array2::zeros((t_len, h)),
        }
    }
}

/// Runs one direction over the full sequence. The input projection is one
/// matrix product; only the recurrent part is sequential.
fn run_direction(dir: &LstmDirection, x: &Array2<f64>, reverse: bool) -> DirTrace {
    let t_len = x.nrows();
    let h_dim = dir.hidden_size();
    let z_in = x.dot(&dir.w_input.t()); // T x 4H
    let mut trace = DirTrace::zeros(t_len, h_dim);
    let mut h_prev = Array1::<f64>::zeros(h_dim);
    let mut c_prev = vec![0.0; h_dim];
    for step in 0..t_len {
        let t = if reverse { t_len - 1 - step } else { step };
        let mut z = dir.w_recurrent.dot(&h_prev);
        z += &z_in.row(t);
        z += &dir.bias;
        let zs = z.as_slice().expect("freshly built Array1 is contiguous");
        for j in 0..h_dim {
            let i_g = sigmoid(zs[j]);
            let f_g = sigmoid(zs[h_dim + j]);
            let g_g = zs[2 * h_dim + j].tanh();
            let o_g = sigmoid(zs[3 * h_dim + j]);
            let c = f_g * c_prev[j] + i_g * g_g;
            let tc = c.tanh();
            trace.gate_i[[t, j]] = i_g;
            trace.gate_f[[t, j]] = f_g;
            trace.gate_g[[t, j]] = g_g;
            trace.gate_o[[t, j]] = o_g;
            trace.cell[[t, j]] = c;
            trace.tanh_cell[[t, j]] = tc;
            trace.hidden[[t, j]] = o_g * tc;
            c_prev[j] = c;
        }
        h_prev.assign(&trace.hidden.row(t));
    }
    trace
}

struct LayerTrace {
    /// The layer's input sequence (`T x D_layer`).
    input: Array2<f64>,
    fwd: DirTrace,
    bwd: DirTrace,
}

/// Full forward pass keeping per-layer activations for backpropagation.
/// Returns the traces, the top concatenated hidden sequence, and the
/// predictions.
fn forward_traces(
    weights: &NetWeights,
    x: &ArrayView2<'_, f64>,
) -> (Vec<LayerTrace>, Array2<f64>, Vec<f64>) {
    let t_len = x.nrows();
    let mut traces = Vec::with_capacity(weights.layers.len());
    let mut input = x.to_owned();
    for layer in &weights.layers {
        let fwd = run_direction(&layer.forward, &input, false);
        let bwd = run_direction(&layer.backward, &input, true);
        let h = layer.forward.hidden_size();
        let mut concat = Array2::zeros((t_len, 2 * h));
        concat.slice_mut(s![.., ..h]).assign(&fwd.hidden);
        concat.slice_mut(s![.., h..]).assign(&bwd.hidden);
        traces.push(LayerTrace { input, fwd, bwd });
        input = concat;
    }
    let preds_arr = input.dot(&weights.output_weight.t()); // T x 1
    let preds: Vec<f64> = (0..t_len).map(|t| preds_arr[[t, 0]] + weights.output_bias[0]).collect();
    (traces, input, preds)
}

fn check_sequence(
    weights: &NetWeights,
    x: &ArrayView2<'_, f64>,
    target: Option<&[f64]>,
) -> Result<(), ModelError> {
    if x.ncols() != weights.input_dim() {
        return Err(ModelError::ShapeMismatch {
            what: "sequence feature columns",
            expected: weights.input_dim(),
            got: x.ncols(),
        });
    }
    if x.nrows() == 0 {
        return Err(ModelError::ShapeMismatch {
            what: "sequence length",
            expected: 1,
            got: 0,
        });
    }
    if let Some(t) = target {
        if t.len() != x.nrows() {
            return Err(ModelError::ShapeMismatch {
                what: "target length",
                expected: x.nrows(),
                got: t.len(),
            });
        }
    }
    Ok(())
}

/// Predictions (in standardized units) for one sequence of standardized
/// features.
pub fn forward(params: &ModelParameters, sequence: &ArrayView2<'_, f64>) -> Result<Vec<f64>, ModelError> {
    check_sequence(&params.weights, sequence, None)?;
    let (_, _, preds) = forward_traces(&params.weights, sequence);
    Ok(preds)
}

/// Backpropagation through time for one direction. `d_ext` is the loss
/// gradient arriving at this direction's hidden sequence. Returns the
/// weight gradients and the gradient w.r.t. the layer input.
fn backprop_direction(
    dir: &LstmDirection,
    trace: &DirTrace,
    x: &Array2<f64>,
    d_ext: &ArrayView2<'_, f64>,
    reverse: bool,
) -> (LstmDirection, Array2<f64>) {
    let t_len = x.nrows();
    let h_dim = dir.hidden_size();
    let mut dz_all = Array2::<f64>::zeros((t_len, 4 * h_dim));
    let mut dh_carry = Array1::<f64>::zeros(h_dim);
    let mut dc_carry = vec![0.0; h_dim];
    for step in (0..t_len).rev() {
        let t = if reverse { t_len - 1 - step } else { step };
        let prev_t = if step > 0 {
            Some(if reverse { t + 1 } else { t - 1 })
        } else {
            None
        };
        {
            let mut dz_row = dz_all.row_mut(t);
            let dzs = dz_row.as_slice_mut().expect("row of standard-layout array");
            for j in 0..h_dim {
                let dh = d_ext[[t, j]] + dh_carry[j];
                let i_g = trace.gate_i[[t, j]];
                let f_g = trace.gate_f[[t, j]];
                let g_g = trace.gate_g[[t, j]];
                let o_g = trace.gate_o[[t, j]];
                let tc = trace.tanh_cell[[t, j]];
                let dc = dh * o_g * (1.0 - tc * tc) + dc_carry[j];
                let c_prev = prev_t.map_or(0.0, |pt| trace.cell[[pt, j]]);
                let d_i = dc * g_g;
                let d_f = dc * c_prev;
                let d_g = dc * i_g;
                let d_o = dh * tc;
                dzs[j] = d_i * i_g * (1.0 - i_g);
                dzs[h_dim + j] = d_f * f_g * (1.0 - f_g);
                dzs[2 * h_dim + j] = d_g * (1.0 - g_g * g_g);
                dzs[3 * h_dim + j] = d_o * o_g * (1.0 - o_g);
                dc_carry[j] = dc * f_g;
            }
        }
        dh_carry = dir.w_recurrent.t().dot(&dz_all.row(t));
    }
    // Hidden states one traversal step earlier, as a matrix, so the
    // recurrent gradient is a single product.
    let mut h_prev_mat = Array2::<f64>::zeros((t_len, h_dim));
    for step in 1..t_len {
        let t = if reverse { t_len - 1 - step } else { step };
        let pt = if reverse { t + 1 } else { t - 1 };
        h_prev_mat.row_mut(t).assign(&trace.hidden.row(pt));
    }
    let grad = LstmDirection {
        w_input: dz_all.t().dot(x),
        w_recurrent: dz_all.t().dot(&h_prev_mat),
        bias: dz_all.sum_axis(Axis(0)),
    };
    let dx = dz_all.dot(&dir.w_input);
    (grad, dx)
}

/// Exact gradient of `SSE = sum_t (pred_t - target_t)^2` together with the
/// loss value and the predictions.
fn gradient_with_loss(
    weights: &NetWeights,
    x: &ArrayView2<'_, f64>,
    target: &[f64],
) -> (NetWeights, f64, Vec<f64>) {
    let (traces, top, preds) = forward_traces(weights, x);
    let t_len = preds.len();
    let mut loss = 0.0;
    let mut dy = Array2::<f64>::zeros((t_len, 1));
    for t in 0..t_len {
        let r = preds[t] - target[t];
        loss += r * r;
        dy[[t, 0]] = 2.0 * r;
    }
    let output_weight = dy.t().dot(&top); // 1 x 2H
    let output_bias = dy.sum_axis(Axis(0)); // 1
    let mut d_next = dy.dot(&weights.output_weight); // T x 2H
    let mut layer_grads: Vec<LstmLayer> = Vec::with_capacity(weights.layers.len());
    for (layer, trace) in weights.layers.iter().zip(&traces).rev() {
        let h = layer.forward.hidden_size();
        let (gf, dxf) =
            backprop_direction(&layer.forward, &trace.fwd, &trace.input, &d_next.slice(s![.., ..h]), false);
        let (gb, dxb) =
            backprop_direction(&layer.backward, &trace.bwd, &trace.input, &d_next.slice(s![.., h..]), true);
        layer_grads.push(LstmLayer { forward: gf, backward: gb });
        d_next = dxf + dxb;
    }
    layer_grads.reverse();
    (
        NetWeights { layers: layer_grads, output_weight, output_bias },
        loss,
        preds,
    )
}

/// Gradient of the SSE loss for one sequence, shaped like the weights.
pub fn gradient(
    params: &ModelParameters,
    sequence: &ArrayView2<'_, f64>,
    target: &[f64],
) -> Result<NetWeights, ModelError> {
    check_sequence(&params.weights, sequence, Some(target))?;
    let (grad, _, _) = gradient_with_loss(&params.weights, sequence, target);
    Ok(grad)
}

/// One training or validation sequence: standardized features (`T x D`)
/// and standardized targets (`T`).
pub type Sequence = (Array2<f64>, Vec<f64>);

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

/// One epoch's losses. Training SSE is accumulated from the per-sequence
/// losses on the noisy inputs as they are visited (before each update);
/// validation SSE is noise-free with the epoch's final weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_sse: f64,
    pub validation_sse: f64,
}

/// Epoch-by-epoch record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

fn validation_sse(weights: &NetWeights, set: &[Sequence]) -> f64 {
    set.iter()
        .map(|(x, y)| {
            let (_, _, preds) = forward_traces(weights, &x.view());
            preds.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>()
        })
        .sum()
}

/// Trains with per-sequence SGD + momentum in the given (fixed) sequence
/// order, fresh input noise each epoch, and early stopping on validation
/// SSE. Returns the parameters of the best epoch and the full log.
pub fn train(
    config: &ModelConfig,
    train_set: &[Sequence],
    validation_set: &[Sequence],
) -> Result<(ModelParameters, TrainLog), ModelError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptySet("training"));
    }
    if validation_set.is_empty() {
        return Err(ModelError::EmptySet("validation"));
    }
    for (x, y) in train_set.iter().chain(validation_set) {
        check_sequence(&NetWeights::zeros(config), &x.view(), Some(y))?;
    }

    let init_params = init(config)?;
    let mut weights = init_params.weights;
    let mut velocity = NetWeights::zeros(config);
    let mut best_weights = weights.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut epochs_without_improvement = 0usize;
    let mut log = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        let mut noise_rng =
            ChaCha8Rng::seed_from_u64(stream_seed(config.seed, NOISE_STREAM_BASE | epoch as u64));
        let mut train_sse = 0.0;
        for (si, (x, y)) in train_set.iter().enumerate() {
            let mut noisy = x.clone();
            if config.noise_std > 0.0 {
                for v in noisy.iter_mut() {
                    let n: f64 = noise_rng.sample(StandardNormal);
                    *v += config.noise_std * n;
                }
            }
            let (mut grad, loss, _) = gradient_with_loss(&weights, &noisy.view(), y);
            if !loss.is_finite() {
                return Err(ModelError::DivergedToNonFinite { epoch, sequence: si });
            }
            train_sse += loss;
            let norm = grad.sq_norm().sqrt();
            if norm > config.gradient_clip {
                grad.scale(config.gradient_clip / norm);
            }
            velocity.scale(config.momentum);
            velocity.scaled_add(-config.learning_rate, &grad);
            weights.scaled_add(1.0, &velocity);
        }
        let val_sse = validation_sse(&weights, validation_set);
        if !val_sse.is_finite() {
            return Err(ModelError::DivergedToNonFinite { epoch, sequence: usize::MAX });
        }
        log.push(EpochStats { epoch, train_sse, validation_sse: val_sse });
        if val_sse < best_val {
            best_val = val_sse;
            best_weights = weights.clone();
            best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
        }
        if epochs_without_improvement >= config.patience {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }

    Ok((
        ModelParameters { config: config.clone(), weights: best_weights, standardizer: None },
        TrainLog { epochs: log, best_epoch, stop_reason },
    ))
}

/// Predictions in label units for a sequence of raw (unstandardized)
/// feature rows: standardize, forward, invert the target mapping.
pub fn predict(params: &ModelParameters, features: &ArrayView2<'_, f64>) -> Result<Vec<f64>, ModelError> {
    let standardizer = params.standardizer.as_ref().ok_or(ModelError::StandardizerMissing)?;
    let z = standardizer.apply_features(features).map_err(|_| ModelError::ShapeMismatch {
        what: "standardizer feature columns",
        expected: standardizer.n_features(),
        got: features.ncols(),
    })?;
    let preds = forward(params, &z.view())?;
    Ok(standardizer.invert_target(&preds))
}
