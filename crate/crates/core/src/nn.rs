//! Dense feed-forward networks with hand-written backpropagation and Adam.
//!
//! Batches are `B × width` row-major matrices. A layer computes
//! `y = act(x Wᵀ + b)` with `W` stored `out × in`. [`DenseNet::forward`]
//! records a [`Tape`] that [`DenseNet::backward`] consumes to produce exact
//! parameter gradients and the gradient with respect to the network input.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const GSNN_MAGIC: &[u8; 5] = b"GSNN1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// `d act / dz`, expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Sigmoid),
            _ => Err(Error::Format {
                format: "GSNN1",
                reason: format!("unknown activation tag {tag}"),
            }),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Which parameter set a network holds: generator `θ` or discriminator `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetRole {
    Generator,
    Discriminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::InvalidArchitecture(format!(
                "weights are {}x{} but bias has length {}",
                weights.nrows(),
                weights.ncols(),
                bias.len()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        self.weights.view_mut()
    }

    pub fn bias_mut(&mut self) -> ArrayViewMut1<'_, f64> {
        self.bias.view_mut()
    }
}

/// Intermediate values from one forward pass: the input fed to each layer
/// and each layer's activation output.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("tape has at least one layer")
    }

    pub fn batch_size(&self) -> usize {
        self.inputs[0].nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
    role: NetRole,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>, role: NetRole) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArchitecture("network has no layers".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::InvalidArchitecture(format!(
                    "layer {l} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    l + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers, role })
    }

    /// All weights and biases zero.
    pub fn zeros(dims: &[usize], activations: &[Activation], role: NetRole) -> Result<Self> {
        check_architecture(dims, activations)?;
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| DenseLayer {
                weights: Array2::zeros((d[1], d[0])),
                bias: Array1::zeros(d[1]),
                activation: act,
            })
            .collect();
        Self::new(layers, role)
    }

    pub fn role(&self) -> NetRole {
        self.role
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<(Array2<f64>, Tape)> {
        self.check_input(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = batch.to_owned();
        for layer in &self.layers {
            let out = layer_forward(layer, current.view());
            inputs.push(current);
            current = out;
            outputs.push(current.clone());
        }
        Ok((current, Tape { inputs, outputs }))
    }

    /// Forward pass without recording intermediates.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(batch)?;
        let mut current = layer_forward(&self.layers[0], batch);
        for layer in &self.layers[1..] {
            current = layer_forward(layer, current.view());
        }
        Ok(current)
    }

    /// Parameter gradients and input gradient for the scalar loss whose
    /// gradient with respect to the network output is `output_grad`.
    pub fn backward(
        &self,
        tape: &Tape,
        output_grad: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        let (grads, input_grad) = self.backprop(tape, output_grad, true)?;
        Ok((grads.expect("parameter gradients requested"), input_grad))
    }

    /// Like [`DenseNet::backward`] but only returns the input gradient.
    pub fn backward_input(&self, tape: &Tape, output_grad: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.backprop(tape, output_grad, false)?.1)
    }

    fn backprop(
        &self,
        tape: &Tape,
        output_grad: ArrayView2<f64>,
        want_params: bool,
    ) -> Result<(Option<Gradients>, Array2<f64>)> {
        self.check_tape(tape, output_grad)?;
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.to_owned();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = &tape.outputs[idx];
            // dL/dz = dL/dy * act'(z)
            Zip::from(&mut upstream).and(out).for_each(|g, &y| {
                *g *= layer.activation.derivative_from_output(y);
            });
            if want_params {
                layer_grads.push(LayerGrad {
                    weights: upstream.t().dot(&tape.inputs[idx]),
                    bias: upstream.sum_axis(Axis(0)),
                });
            }
            upstream = upstream.dot(&layer.weights);
        }
        let grads = want_params.then(|| {
            layer_grads.reverse();
            Gradients {
                layers: layer_grads,
            }
        });
        Ok((grads, upstream))
    }

    fn check_input(&self, batch: ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.in_dim(),
                got: batch.ncols(),
            });
        }
        Ok(())
    }

    fn check_tape(&self, tape: &Tape, output_grad: ArrayView2<f64>) -> Result<()> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::StaleTape(format!(
                "tape has {} layers, network has {}",
                tape.inputs.len(),
                self.layers.len()
            )));
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let (input, output) = (&tape.inputs[idx], &tape.outputs[idx]);
            if input.ncols() != layer.in_dim() || output.ncols() != layer.out_dim() {
                return Err(Error::StaleTape(format!(
                    "layer {idx} cache is {}→{}, layer is {}→{}",
                    input.ncols(),
                    output.ncols(),
                    layer.in_dim(),
                    layer.out_dim()
                )));
            }
        }
        if output_grad.dim() != tape.output().dim() {
            return Err(Error::StaleTape(format!(
                "output gradient is {:?}, forward output was {:?}",
                output_grad.dim(),
                tape.output().dim()
            )));
        }
        Ok(())
    }

    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(9 + 9 * self.layers.len() + 8 * self.n_params());
        buf.extend_from_slice(GSNN_MAGIC);
        buf.extend_from_slice(&crate::observe::u32_len(self.layers.len())?.to_le_bytes());
        for layer in &self.layers {
            buf.extend_from_slice(&crate::observe::u32_len(layer.in_dim())?.to_le_bytes());
            buf.extend_from_slice(&crate::observe::u32_len(layer.out_dim())?.to_le_bytes());
            buf.push(layer.activation.tag());
        }
        for layer in &self.layers {
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut input: R, role: NetRole) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let mut cursor = ByteCursor::new(&bytes);
        if cursor.take(5)? != GSNN_MAGIC {
            return Err(Error::Format {
                format: "GSNN1",
                reason: "bad magic".into(),
            });
        }
        let n_layers = cursor.u32()? as usize;
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_dim = cursor.u32()? as usize;
            let out_dim = cursor.u32()? as usize;
            let act = Activation::from_tag(cursor.take(1)?[0])?;
            shapes.push((in_dim, out_dim, act));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (in_dim, out_dim, act) in shapes {
            let w = cursor.f64s(in_dim * out_dim)?;
            let b = cursor.f64s(out_dim)?;
            let weights =
                Array2::from_shape_vec((out_dim, in_dim), w).expect("length checked by cursor");
            layers.push(DenseLayer::new(weights, Array1::from(b), act)?);
        }
        if !cursor.is_empty() {
            return Err(Error::Format {
                format: "GSNN1",
                reason: "trailing bytes after parameters".into(),
            });
        }
        Self::new(layers, role)
    }
}

fn layer_forward(layer: &DenseLayer, input: ArrayView2<f64>) -> Array2<f64> {
    let mut z = input.dot(&layer.weights.t());
    z += &layer.bias;
    let act = layer.activation;
    z.mapv_inplace(|v| act.apply(v));
    z
}

fn check_architecture(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidArchitecture(
            "need at least an input and an output width".into(),
        ));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidArchitecture("layer width 0".into()));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::InvalidArchitecture(format!(
            "{} widths need {} activations, got {}",
            dims.len(),
            dims.len() - 1,
            activations.len()
        )));
    }
    Ok(())
}

/// Glorot-uniform weights in `±√(6/(in+out))`, zero biases.
pub fn init_params(
    dims: &[usize],
    activations: &[Activation],
    role: NetRole,
    seed: u64,
) -> Result<DenseNet> {
    let mut net = DenseNet::zeros(dims, activations, role)?;
    let mut rng = seeded(seed);
    for layer in &mut net.layers {
        let limit = (6.0 / (layer.in_dim() + layer.out_dim()) as f64).sqrt();
        layer
            .weights
            .mapv_inplace(|_| rng.random_range(-limit..limit));
    }
    Ok(net)
}

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

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Gradients,
    second: Gradients,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of every parameter of `net`.
pub fn adam_step(net: &mut DenseNet, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if grads.layers.len() != net.layers.len() || state.first.layers.len() != net.layers.len() {
        return Err(Error::ShapeMismatch(format!(
            "network has {} layers, gradients {}, optimizer state {}",
            net.layers.len(),
            grads.layers.len(),
            state.first.layers.len()
        )));
    }
    for (idx, (layer, g)) in net.layers.iter().zip(&grads.layers).enumerate() {
        let m = &state.first.layers[idx];
        if g.weights.dim() != layer.weights.dim()
            || g.bias.len() != layer.bias.len()
            || m.weights.dim() != layer.weights.dim()
        {
            return Err(Error::ShapeMismatch(format!(
                "layer {idx}: parameters {:?}, gradient {:?}, state {:?}",
                layer.weights.dim(),
                g.weights.dim(),
                m.weights.dim()
            )));
        }
    }

    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (idx, layer) in net.layers.iter_mut().enumerate() {
        let g = &grads.layers[idx];
        let m = &mut state.first.layers[idx];
        let v = &mut state.second.layers[idx];
        Zip::from(&mut layer.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .and(&g.weights)
            .for_each(|p, m, v, &g| update(p, m, v, g));
        Zip::from(&mut layer.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .and(&g.bias)
            .for_each(|p, m, v, &g| update(p, m, v, g));
    }
    if !net.all_finite() {
        return Err(Error::DivergedLoss {
            what: "network parameter",
            value: f64::NAN,
        });
    }
    Ok(())
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::TruncatedFile {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
