//! Minimal deterministic dense-network engine: forward, exact reverse-mode
//! gradients, MSE/BCE losses, and bias-corrected Adam.
//!
//! Everything is 64-bit and a pure function of its inputs; the same seed
//! always reproduces the same bits. Shape mismatches are reported as errors,
//! never broadcast away.

mod matrix;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Pcg32;

pub use matrix::{axpy, dot, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("{what}: expected length {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative evaluated from the pre-activation `z` and output `y`.
    /// relu'(0) is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One layer of an [`MlpSpec`]: output width plus activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

/// Architecture description: input dimension and an ordered layer list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl MlpSpec {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Result<Self, NnError> {
        if input_dim == 0 {
            return Err(NnError::InvalidSpec("input_dim must be >= 1".into()));
        }
        if layers.is_empty() {
            return Err(NnError::InvalidSpec("layer list must be non-empty".into()));
        }
        if layers.iter().any(|l| l.width == 0) {
            return Err(NnError::InvalidSpec("layer widths must be >= 1".into()));
        }
        Ok(Self { input_dim, layers })
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.width).unwrap_or(0)
    }
}

/// Weights `(out x in)` and bias of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Full parameter set of a dense network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    input_dim: usize,
    layers: Vec<DenseLayer>,
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpec::new(l.out_dim(), l.activation))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Rebuilds a parameter set from raw layers, checking chain consistency.
    pub fn from_layers(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::InvalidSpec("layer list must be non-empty".into()));
        }
        let mut prev = input_dim;
        for layer in &layers {
            if layer.in_dim() != prev {
                return Err(NnError::ShapeMismatch {
                    what: "layer input",
                    expected: prev,
                    got: layer.in_dim(),
                });
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(NnError::ShapeMismatch {
                    what: "bias",
                    expected: layer.out_dim(),
                    got: layer.bias.len(),
                });
            }
            prev = layer.out_dim();
        }
        Ok(Self { input_dim, layers })
    }
}

/// Deterministic initialization: He-scaled normals for relu layers,
/// Xavier-uniform for sigmoid/identity layers, zero biases. The weight
/// stream is a single [`Pcg32`] seeded with `seed`, consumed layer by layer
/// in row-major order.
pub fn init_params(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = Pcg32::new(seed);
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut in_dim = spec.input_dim;
    for layer in &spec.layers {
        let out_dim = layer.width;
        let mut weight = Matrix::zeros(out_dim, in_dim);
        match layer.activation {
            Activation::Relu => {
                let std = (2.0 / in_dim as f64).sqrt();
                for w in weight.data_mut() {
                    *w = std * rng.next_normal();
                }
            }
            Activation::Sigmoid | Activation::Identity => {
                let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
                for w in weight.data_mut() {
                    *w = rng.uniform(-limit, limit);
                }
            }
        }
        layers.push(DenseLayer {
            weight,
            bias: vec![0.0; out_dim],
            activation: layer.activation,
        });
        in_dim = out_dim;
    }
    MlpParams {
        input_dim: spec.input_dim,
        layers,
    }
}

/// Per-layer pre- and post-activations captured by [`forward`]; everything
/// [`backward`] needs besides the parameters themselves.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    fn layer_input(&self, layer: usize) -> &[f64] {
        if layer == 0 {
            &self.input
        } else {
            &self.post[layer - 1]
        }
    }
}

/// Composed affine + activation maps. Returns the output vector and the
/// cache for a later backward pass.
pub fn forward(params: &MlpParams, x: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
    if x.len() != params.input_dim {
        return Err(NnError::ShapeMismatch {
            what: "input",
            expected: params.input_dim,
            got: x.len(),
        });
    }
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut post = Vec::with_capacity(params.layers.len());
    let mut cur: &[f64] = x;
    for layer in &params.layers {
        let mut z = vec![0.0; layer.out_dim()];
        for (o, zo) in z.iter_mut().enumerate() {
            *zo = layer.bias[o] + dot(layer.weight.row(o), cur);
        }
        let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
        pre.push(z);
        post.push(a);
        cur = post.last().unwrap();
    }
    let y = post.last().unwrap().clone();
    Ok((
        y,
        ForwardCache {
            input: x.to_vec(),
            pre,
            post,
        },
    ))
}

/// Output-only forward pass; skips the activation cache when no backward
/// pass will follow.
pub fn forward_output(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>, NnError> {
    if x.len() != params.input_dim {
        return Err(NnError::ShapeMismatch {
            what: "input",
            expected: params.input_dim,
            got: x.len(),
        });
    }
    let mut cur = x.to_vec();
    for layer in &params.layers {
        let mut next = vec![0.0; layer.out_dim()];
        for (o, v) in next.iter_mut().enumerate() {
            *v = layer
                .activation
                .apply(layer.bias[o] + dot(layer.weight.row(o), &cur));
        }
        cur = next;
    }
    Ok(cur)
}

/// Gradients shaped like their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub d_weight: Matrix,
    pub d_bias: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrads {
                    d_weight: Matrix::zeros(l.out_dim(), l.in_dim()),
                    d_bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn fill(&mut self, v: f64) {
        for l in &mut self.layers {
            l.d_weight.fill(v);
            l.d_bias.fill(v);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for w in l.d_weight.data_mut() {
                *w *= s;
            }
            for b in &mut l.d_bias {
                *b *= s;
            }
        }
    }
}

/// Exact reverse-mode gradients of the map computed by [`forward`].
/// Returns parameter gradients and the gradient with respect to the input.
pub fn backward(
    params: &MlpParams,
    cache: &ForwardCache,
    grad_out: &[f64],
) -> Result<(MlpGrads, Vec<f64>), NnError> {
    let mut grads = MlpGrads::zeros_like(params);
    let grad_in = backward_accumulate(params, cache, grad_out, &mut grads)?;
    Ok((grads, grad_in))
}

/// Like [`backward`] but accumulates parameter gradients into `grads`
/// (`+=`), which lets training loops sum over a mini-batch without
/// reallocating. Returns the input gradient for this sample.
pub fn backward_accumulate(
    params: &MlpParams,
    cache: &ForwardCache,
    grad_out: &[f64],
    grads: &mut MlpGrads,
) -> Result<Vec<f64>, NnError> {
    if cache.post.len() != params.layers.len() {
        return Err(NnError::ShapeMismatch {
            what: "cache layers",
            expected: params.layers.len(),
            got: cache.post.len(),
        });
    }
    if grad_out.len() != params.output_dim() {
        return Err(NnError::ShapeMismatch {
            what: "grad_out",
            expected: params.output_dim(),
            got: grad_out.len(),
        });
    }
    if grads.layers.len() != params.layers.len() {
        return Err(NnError::ShapeMismatch {
            what: "grads layers",
            expected: params.layers.len(),
            got: grads.layers.len(),
        });
    }

    let mut upstream = grad_out.to_vec();
    for (l, layer) in params.layers.iter().enumerate().rev() {
        if cache.pre[l].len() != layer.out_dim() || cache.layer_input(l).len() != layer.in_dim() {
            return Err(NnError::ShapeMismatch {
                what: "cache activation",
                expected: layer.out_dim(),
                got: cache.pre[l].len(),
            });
        }
        let input = cache.layer_input(l);
        let lg = &mut grads.layers[l];
        let mut grad_in = vec![0.0; layer.in_dim()];
        for o in 0..layer.out_dim() {
            let dz = upstream[o] * layer.activation.derivative(cache.pre[l][o], cache.post[l][o]);
            if dz == 0.0 {
                continue;
            }
            lg.d_bias[o] += dz;
            axpy(dz, input, lg.d_weight.row_mut(o));
            axpy(dz, layer.weight.row(o), &mut grad_in);
        }
        upstream = grad_in;
    }
    Ok(upstream)
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if pred.len() != target.len() {
        return Err(NnError::ShapeMismatch {
            what: "mse target",
            expected: pred.len(),
            got: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(NnError::InvalidSpec("mse over empty vectors".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (g, (&p, &t)) in grad.iter_mut().zip(pred.iter().zip(target)) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Probability clamp applied before the BCE logarithms.
pub const BCE_EPS: f64 = 1e-7;

/// Binary cross-entropy of probability `p` against label `y`, with `p`
/// clamped to `[BCE_EPS, 1 - BCE_EPS]` so the logs stay finite. The gradient
/// is evaluated at the clamped probability.
pub fn bce_loss(p: f64, y: u8) -> (f64, f64) {
    debug_assert!(y <= 1, "bce label must be 0 or 1");
    let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        (-pc.ln(), -1.0 / pc)
    } else {
        (-(1.0 - pc).ln(), 1.0 / (1.0 - pc))
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// First/second-moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub t: u64,
    m: MlpGrads,
    v: MlpGrads,
}

impl AdamState {
    pub fn new(params: &MlpParams, cfg: AdamConfig) -> Self {
        assert!(
            0.0 < cfg.beta1 && cfg.beta1 < 1.0 && 0.0 < cfg.beta2 && cfg.beta2 < 1.0,
            "adam betas must lie in (0, 1)"
        );
        Self {
            cfg,
            t: 0,
            m: MlpGrads::zeros_like(params),
            v: MlpGrads::zeros_like(params),
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpGrads,
    state: &mut AdamState,
) -> Result<(), NnError> {
    if grads.layers.len() != params.layers.len() {
        return Err(NnError::ShapeMismatch {
            what: "adam grads",
            expected: params.layers.len(),
            got: grads.layers.len(),
        });
    }
    state.t += 1;
    let cfg = state.cfg;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        if g.d_weight.rows() != layer.out_dim() || g.d_weight.cols() != layer.in_dim() {
            return Err(NnError::ShapeMismatch {
                what: "adam weight grad",
                expected: layer.out_dim() * layer.in_dim(),
                got: g.d_weight.rows() * g.d_weight.cols(),
            });
        }
        update_slice(
            layer.weight.data_mut(),
            g.d_weight.data(),
            state.m.layers[l].d_weight.data_mut(),
            state.v.layers[l].d_weight.data_mut(),
            cfg,
            bc1,
            bc2,
        );
        update_slice(
            &mut layer.bias,
            &g.d_bias,
            &mut state.m.layers[l].d_bias,
            &mut state.v.layers[l].d_bias,
            cfg,
            bc1,
            bc2,
        );
    }
    Ok(())
}

#[inline]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: AdamConfig,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

mod gradcheck;
pub use gradcheck::{
    compare_grads, finite_diff_grads, grad_check, grad_check_at, GradCheckDetail, LayerError,
    GRAD_CHECK_H,
};
