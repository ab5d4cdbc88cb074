//! Dense feedforward networks with backpropagation, inverted dropout and Adam.
//!
//! Weights are stored `fan_in × fan_out` so a layer computes
//! `act(X · W + b)` for a row-major batch `X`.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Uniform};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::seeded_rng;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("network needs at least one layer")]
    EmptySpec,
    #[error("layer {layer}: {reason}")]
    SizeMismatch { layer: usize, reason: String },
    #[error("input has {actual} columns, network expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("forward cache does not match this network or gradient: {0}")]
    CacheMismatch(String),
    #[error("parameter and gradient shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {0} predictions vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("layer index {index} out of range for {layers} layers")]
    IndexOutOfRange { index: usize, layers: usize },
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropout(f64),
    #[error("cannot parse network: {0}")]
    Parse(String),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(NnError::Parse(format!("unknown activation `{other}`"))),
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

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

/// Multilayer perceptron. Dropout applies to hidden-layer outputs in training passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub dropout_rate: f64,
}

/// Per-layer values recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input fed to each layer (after any dropout on the previous layer).
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    /// Activations before dropout.
    post: Vec<Matrix>,
    /// Scaled keep masks (`0` or `1/(1-rate)`), one per layer when dropout ran.
    masks: Vec<Option<Matrix>>,
}

impl ForwardCache {
    pub fn n_layers(&self) -> usize {
        self.pre.len()
    }

    pub fn mask(&self, layer: usize) -> Option<&Matrix> {
        self.masks.get(layer).and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients for the layers covered by a forward cache, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct Backprop {
    pub grads: Gradients,
    /// Gradient of the loss with respect to the batch fed to the first layer.
    pub input_grad: Matrix,
}

/// Builds a network from `(fan_in, fan_out)` pairs with Glorot-uniform
/// weights and zero biases.
pub fn init_network(
    shape: &[(usize, usize)],
    activations: &[Activation],
    dropout_rate: f64,
    seed: u64,
) -> Result<Mlp> {
    if shape.is_empty() {
        return Err(NnError::EmptySpec);
    }
    if activations.len() != shape.len() {
        return Err(NnError::SizeMismatch {
            layer: activations.len().min(shape.len()),
            reason: format!(
                "{} activations for {} layers",
                activations.len(),
                shape.len()
            ),
        });
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(NnError::InvalidDropout(dropout_rate));
    }
    let mut rng = seeded_rng(seed);
    let mut layers = Vec::with_capacity(shape.len());
    for (i, (&(fan_in, fan_out), &activation)) in shape.iter().zip(activations).enumerate() {
        if fan_in == 0 || fan_out == 0 {
            return Err(NnError::SizeMismatch {
                layer: i,
                reason: "layer sizes must be positive".into(),
            });
        }
        if i > 0 && shape[i - 1].1 != fan_in {
            return Err(NnError::SizeMismatch {
                layer: i,
                reason: format!("fan_in {fan_in} does not chain from {}", shape[i - 1].1),
            });
        }
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
        layers.push(Layer {
            weights: Matrix::from_vec(fan_in, fan_out, data),
            bias: vec![0.0; fan_out],
            activation,
        });
    }
    Ok(Mlp {
        layers,
        dropout_rate,
    })
}

/// Convenience: chain `sizes[0] → sizes[1] → ...` with `hidden` activations
/// on every layer but the last, which uses `output`.
pub fn init_chain(
    sizes: &[usize],
    hidden: Activation,
    output: Activation,
    dropout_rate: f64,
    seed: u64,
) -> Result<Mlp> {
    if sizes.len() < 2 {
        return Err(NnError::EmptySpec);
    }
    let shape: Vec<_> = sizes.windows(2).map(|w| (w[0], w[1])).collect();
    let mut acts = vec![hidden; shape.len()];
    *acts.last_mut().expect("non-empty") = output;
    init_network(&shape, &acts, dropout_rate, seed)
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty network").fan_out()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Full forward pass. With `training` set, hidden outputs go through
    /// inverted dropout drawn from `seed`; otherwise the pass is
    /// deterministic and ignores `seed`.
    pub fn forward(&self, batch: &Matrix, training: bool, seed: u64) -> Result<(Matrix, ForwardCache)> {
        self.forward_to(batch, self.layers.len() - 1, training, seed)
    }

    /// Forward pass through layers `0..=last_layer`.
    pub fn forward_to(
        &self,
        batch: &Matrix,
        last_layer: usize,
        training: bool,
        seed: u64,
    ) -> Result<(Matrix, ForwardCache)> {
        if last_layer >= self.layers.len() {
            return Err(NnError::IndexOutOfRange {
                index: last_layer,
                layers: self.layers.len(),
            });
        }
        if batch.cols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                actual: batch.cols(),
            });
        }
        let apply_dropout = training && self.dropout_rate > 0.0;
        let mut rng = apply_dropout.then(|| seeded_rng(seed));
        let n = last_layer + 1;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
        };
        let mut current = batch.clone();
        for (i, layer) in self.layers[..n].iter().enumerate() {
            let mut z = current.matmul(&layer.weights);
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let a = z.map(|v| layer.activation.apply(v));
            let is_hidden = i + 1 < self.layers.len();
            let (next, mask) = match rng.as_mut() {
                Some(rng) if is_hidden => {
                    let keep = 1.0 - self.dropout_rate;
                    let scale = 1.0 / keep;
                    let mask_data: Vec<f64> = (0..a.rows() * a.cols())
                        .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
                        .collect();
                    let mask = Matrix::from_vec(a.rows(), a.cols(), mask_data);
                    let dropped = Matrix::from_vec(
                        a.rows(),
                        a.cols(),
                        a.as_slice().iter().zip(mask.as_slice()).map(|(x, m)| x * m).collect(),
                    );
                    (dropped, Some(mask))
                }
                _ => (a.clone(), None),
            };
            cache.inputs.push(std::mem::replace(&mut current, next));
            cache.pre.push(z);
            cache.post.push(a);
            cache.masks.push(mask);
        }
        Ok((current, cache))
    }

    /// Inference-mode output.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.forward(batch, false, 0).map(|(out, _)| out)
    }

    /// Reverse-mode gradients for the layers covered by `cache`, given the
    /// loss gradient with respect to the cache's final (post-dropout) output.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Backprop> {
        let n = cache.n_layers();
        if n == 0 || n > self.layers.len() {
            return Err(NnError::CacheMismatch(format!(
                "cache covers {n} layers, network has {}",
                self.layers.len()
            )));
        }
        for (i, layer) in self.layers[..n].iter().enumerate() {
            let pre = &cache.pre[i];
            if pre.cols() != layer.fan_out() || cache.inputs[i].cols() != layer.fan_in() {
                return Err(NnError::CacheMismatch(format!("layer {i} shape differs")));
            }
        }
        if output_grad.shape() != cache.pre[n - 1].shape() {
            return Err(NnError::CacheMismatch(format!(
                "output gradient {:?} vs cached output {:?}",
                output_grad.shape(),
                cache.pre[n - 1].shape()
            )));
        }

        let mut grads = Vec::with_capacity(n);
        let mut upstream = output_grad.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let pre = &cache.pre[i];
            let post = &cache.post[i];
            let mask = cache.masks[i].as_ref();
            let mut dz = upstream;
            for (k, g) in dz.as_mut_slice().iter_mut().enumerate() {
                let m = mask.map_or(1.0, |m| m.as_slice()[k]);
                *g *= m * layer.activation.derivative(pre.as_slice()[k], post.as_slice()[k]);
            }
            let dw = cache.inputs[i].t_matmul(&dz);
            let mut db = vec![0.0; layer.fan_out()];
            for r in dz.iter_rows() {
                for (b, &g) in db.iter_mut().zip(r) {
                    *b += g;
                }
            }
            upstream = dz.matmul_t(&layer.weights);
            grads.push(LayerGrad {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        Ok(Backprop {
            grads: Gradients { layers: grads },
            input_grad: upstream,
        })
    }

    /// Inference-mode post-activation output of layer `layer_index`.
    pub fn forward_features(&self, batch: &Matrix, layer_index: usize) -> Result<Matrix> {
        self.forward_to(batch, layer_index, false, 0).map(|(out, _)| out)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Text serialization. Floats are written in Rust's shortest
    /// round-trip form so [`Mlp::from_text`] restores them bit-exactly.
    ///
    /// ```text
    /// mlp 1
    /// dropout <rate>
    /// layers <n>
    /// layer <fan_in> <fan_out> <activation>
    /// w <fan_in*fan_out row-major values>
    /// b <fan_out values>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mlp 1");
        let _ = writeln!(s, "dropout {}", self.dropout_rate);
        let _ = writeln!(s, "layers {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(s, "layer {} {} {}", l.fan_in(), l.fan_out(), l.activation.name());
            s.push('w');
            for v in l.weights.as_slice() {
                let _ = write!(s, " {v:?}");
            }
            s.push_str("\nb");
            for v in &l.bias {
                let _ = write!(s, " {v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mlp> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| NnError::Parse(format!("missing {what} line")))
        };
        if next("magic")?.trim() != "mlp 1" {
            return Err(NnError::Parse("bad magic line".into()));
        }
        let dropout: f64 = parse_field(next("dropout")?, "dropout")?;
        let n: usize = parse_field(next("layers")?, "layers")?;
        let mut shape = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            let header: Vec<&str> = next("layer")?.split_whitespace().collect();
            if header.len() != 4 || header[0] != "layer" {
                return Err(NnError::Parse("malformed layer header".into()));
            }
            let fan_in: usize = parse_num(header[1])?;
            let fan_out: usize = parse_num(header[2])?;
            acts.push(header[3].parse::<Activation>()?);
            shape.push((fan_in, fan_out));
            let w = parse_values(next("weights")?, "w", fan_in * fan_out)?;
            let b = parse_values(next("bias")?, "b", fan_out)?;
            params.push((w, b));
        }
        let mut net = init_network(&shape, &acts, dropout, 0)?;
        for (layer, (w, b)) in net.layers.iter_mut().zip(params) {
            layer.weights = Matrix::from_vec(layer.fan_in(), layer.fan_out(), w);
            layer.bias = b;
        }
        Ok(net)
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| NnError::Parse(format!("invalid number `{s}`")))
}

fn parse_field<T: FromStr>(line: &str, key: &str) -> Result<T> {
    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, v] if *k == key => parse_num(v),
        _ => Err(NnError::Parse(format!("expected `{key} <value>`"))),
    }
}

fn parse_values(line: &str, tag: &str, expected: usize) -> Result<Vec<f64>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(NnError::Parse(format!("expected `{tag}` line")));
    }
    let values = parts.map(parse_num).collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(NnError::Parse(format!(
            "`{tag}` line has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self::for_shapes(net.param_slices().iter().map(|s| s.len()), learning_rate)
    }

    pub fn for_shapes(lens: impl IntoIterator<Item = usize>, learning_rate: f64) -> Self {
        let (m, v): (Vec<_>, Vec<_>) = lens.into_iter().map(|n| (vec![0.0; n], vec![0.0; n])).unzip();
        Self {
            m,
            v,
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step_slices(&mut self, mut params: Vec<&mut [f64]>, grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch(format!(
                "{} parameter buffers, {} gradient buffers, state has {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(NnError::ShapeMismatch(format!("buffer {i} length differs")));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != net.layers.len() {
            return Err(NnError::ShapeMismatch(format!(
                "gradients cover {} layers, network has {}",
                grads.layers.len(),
                net.layers.len()
            )));
        }
        let g = grads.slices();
        self.step_slices(net.param_slices_mut(), &g)
    }
}

/// Mean binary cross-entropy and its gradient with respect to `pred`.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(NnError::LengthMismatch(pred.len(), target.len()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.iter().zip(target) {
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.push((-t / p + (1.0 - t) / (1.0 - p)) / n);
    }
    Ok((loss / n, grad))
}
