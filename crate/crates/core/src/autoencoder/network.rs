use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{smooth_l1_grad, smooth_l1_loss};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// One weight layer: `a = act(W x + b)` with `W` shaped (out, in).
///
/// `weight_carry`/`bias_carry` hold the rounding residue of past updates
/// so that parameter accumulation is compensated (two-sum). The forward
/// pass only ever reads `weights` and `bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub(crate) weight_carry: Array2<f64>,
    pub(crate) bias_carry: Array1<f64>,
}

impl Layer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::Dimension(format!(
                "weights have {} rows but bias has {} entries",
                weights.nrows(),
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite layer parameter".into()));
        }
        let weight_carry = Array2::zeros(weights.raw_dim());
        let bias_carry = Array1::zeros(bias.len());
        Ok(Layer {
            weights,
            bias,
            activation,
            weight_carry,
            bias_carry,
        })
    }

    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }

    fn forward(&self, input: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights.t());
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

/// Fully connected autoencoder. Layer `bottleneck` produces the latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub(crate) layers: Vec<Layer>,
    pub(crate) bottleneck: usize,
}

/// Bottleneck width `floor(1 + sqrt(n))`.
pub fn bottleneck_width(n_features: usize) -> usize {
    (1.0 + (n_features as f64).sqrt()).floor() as usize
}

/// Hidden width between input and bottleneck: `round(sqrt(n * m))`.
pub fn hidden_width(n_features: usize) -> usize {
    let m = bottleneck_width(n_features);
    ((n_features * m) as f64).sqrt().round().max(1.0) as usize
}

/// Five node layers `[n, h, m, h, n]`, tanh everywhere except an identity
/// output layer, weights uniform in `±1/sqrt(fan_in)`, zero biases.
pub fn build_architecture(n_features: usize, seed: u64) -> Result<Network> {
    if n_features < 1 {
        return Err(Error::Config("n_features must be at least 1".into()));
    }
    let m = bottleneck_width(n_features);
    let h = hidden_width(n_features);
    Network::from_widths(&[n_features, h, m, h, n_features], seed)
}

impl Network {
    /// Symmetric autoencoder over `widths` (odd length ≥ 3). The middle
    /// entry is the bottleneck.
    pub fn from_widths(widths: &[usize], seed: u64) -> Result<Network> {
        if widths.len() < 3 || widths.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "autoencoder needs an odd number (≥ 3) of node layers, got {}",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for (i, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..=bound));
            let activation = if i + 1 == n_layers {
                Activation::Identity
            } else {
                Activation::Tanh
            };
            layers.push(Layer::new(weights, Array1::zeros(fan_out), activation)?);
        }
        Network::from_layers(layers)
    }

    /// Assemble from explicit layers. The bottleneck is the output of layer
    /// `len / 2 - 1`.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Network> {
        if layers.len() < 2 || !layers.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "autoencoder needs an even number (≥ 2) of weight layers, got {}",
                layers.len()
            )));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].n_out() != w[1].n_in() {
                return Err(Error::Dimension(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].n_out(),
                    i + 1,
                    w[1].n_in()
                )));
            }
        }
        if layers[0].n_in() != layers[layers.len() - 1].n_out() {
            return Err(Error::Dimension("output width differs from input width".into()));
        }
        let bottleneck = layers.len() / 2 - 1;
        Ok(Network { layers, bottleneck })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Index of the weight layer whose output is the latent code.
    pub fn bottleneck_layer(&self) -> usize {
        self.bottleneck
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].n_in())
            .chain(self.layers.iter().map(Layer::n_out))
            .collect()
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn latent_width(&self) -> usize {
        self.layers[self.bottleneck].n_out()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_width(&self, batch: &ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.n_inputs() {
            return Err(Error::Dimension(format!(
                "network expects {} features, batch has {}",
                self.n_inputs(),
                batch.ncols()
            )));
        }
        Ok(())
    }

    /// Run the batch through every layer, keeping all activations.
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Forward> {
        self.check_width(&batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.to_owned());
        for layer in &self.layers {
            let next = layer.forward(&activations.last().unwrap().view());
            activations.push(next);
        }
        Ok(Forward { activations })
    }

    /// Gradients of the mean SmoothL1 reconstruction loss against `target`.
    pub fn backward(&self, fwd: &Forward, target: ArrayView2<f64>) -> Result<Gradients> {
        let output = fwd.output();
        if output.dim() != target.dim() {
            return Err(Error::Dimension(format!(
                "output {:?} vs target {:?}",
                output.dim(),
                target.dim()
            )));
        }
        let mut delta = smooth_l1_grad(output.view(), target);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &fwd.activations[i + 1];
            let act = layer.activation;
            if act != Activation::Identity {
                delta.zip_mut_with(out, |d, &a| *d *= act.derivative_from_output(a));
            }
            let input = &fwd.activations[i];
            let weights = delta.t().dot(input);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                delta = delta.dot(&layer.weights);
            }
            grads.push(LayerGrad { weights, bias });
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            bottleneck: self.bottleneck,
        })
    }

    /// Forward + backward on one batch, returning the loss and gradients.
    pub fn loss_and_gradients(&self, batch: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        let fwd = self.forward(batch)?;
        let loss = smooth_l1_loss(fwd.output().view(), batch)?;
        let grads = self.backward(&fwd, batch)?;
        Ok((loss, grads))
    }

    /// Bottleneck activations for each row of `batch`.
    pub fn encode_batch(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_width(&batch)?;
        let mut a = self.layers[0].forward(&batch);
        for layer in &self.layers[1..=self.bottleneck] {
            a = layer.forward(&a.view());
        }
        Ok(a)
    }

    pub fn reconstruct(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(batch)?.into_output())
    }

    /// Latent matrix (rows × m).
    pub fn encode(&self, data: &Dataset) -> Result<Array2<f64>> {
        self.encode_batch(data.features.view())
    }

    /// Per-row mean SmoothL1 between reconstruction and input.
    pub fn reconstruction_error(&self, data: &Dataset) -> Result<Vec<f64>> {
        let out = self.reconstruct(data.features.view())?;
        Ok(out
            .rows()
            .into_iter()
            .zip(data.features.rows())
            .map(|(o, x)| {
                let n = o.len() as f64;
                o.iter()
                    .zip(x.iter())
                    .map(|(a, b)| super::smooth_l1(a - b))
                    .sum::<f64>()
                    / n
            })
            .collect())
    }

    /// Mean SmoothL1 loss over the whole matrix.
    pub fn loss(&self, batch: ArrayView2<f64>) -> Result<f64> {
        let out = self.reconstruct(batch)?;
        smooth_l1_loss(out.view(), batch)
    }

    /// `θ ← θ − lr·g` for every parameter.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "{} gradient layers for {} network layers",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            if layer.weights.dim() != g.weights.dim() || layer.bias.len() != g.bias.len() {
                return Err(Error::Dimension("gradient shape mismatch".into()));
            }
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut layer.weight_carry)
                .and(&g.weights)
                .for_each(|w, c, &gw| accumulate(w, c, -(lr * gw)));
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut layer.bias_carry)
                .and(&g.bias)
                .for_each(|b, c, &gb| accumulate(b, c, -(lr * gb)));
        }
        Ok(())
    }

    /// Apply the inverted gradient, `θ ← θ + lr·g`. Undoes an
    /// `sgd_step(grads, lr)` taken from the same parameters exactly.
    pub fn reverse_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        self.sgd_step(grads, -lr)
    }

    /// All parameters flattened layer by layer (weights row-major, then bias).
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Compensated `value += delta`, with `carry` holding the running residue.
#[inline]
fn accumulate(value: &mut f64, carry: &mut f64, delta: f64) {
    let (s, e) = two_sum(*value, delta);
    let (hi, lo) = two_sum(s, *carry + e);
    *value = hi;
    *carry = lo;
}

/// Activations of every node layer; index 0 is the input.
#[derive(Debug, Clone)]
pub struct Forward {
    pub activations: Vec<Array2<f64>>,
}

impl Forward {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("forward has at least the input")
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.activations.pop().expect("forward has at least the input")
    }

    /// Activations of node layer `layer + 1`, i.e. the output of weight layer `layer`.
    pub fn layer_output(&self, layer: usize) -> &Array2<f64> {
        &self.activations[layer + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Per-parameter gradients matching a [`Network`]'s layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub(crate) bottleneck: usize,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
            bottleneck: net.bottleneck,
        }
    }

    /// Weight gradient of the layer producing the latent code.
    pub fn bottleneck_weights(&self) -> ArrayView2<'_, f64> {
        self.layers[self.bottleneck].weights.view()
    }

    pub fn scaled(&self, c: f64) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|g| LayerGrad {
                    weights: &g.weights * c,
                    bias: &g.bias * c,
                })
                .collect(),
            bottleneck: self.bottleneck,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weights.iter().copied());
            out.extend(g.bias.iter().copied());
        }
        out
    }
}
