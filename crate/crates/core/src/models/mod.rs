//! Small differentiable classifiers with exact input gradients.

mod data;
mod idx;
mod train;
mod weights;

pub use data::{make_blobs, Dataset};
pub use idx::{load_mnist_idx, write_idx_images, write_idx_labels};
pub use train::{accuracy, train_mlp, TrainConfig, TrainReport};
pub use weights::{load_model, save_model};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative at pre-activation `v`; ReLU uses 0 at the kink.
    fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = v.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Dense affine map `y = W x + b` with `W` stored row-major (`rows` outputs,
/// `cols` inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::InvalidModel(format!(
                "layer {rows}x{cols} needs {} weights, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::InvalidModel(format!(
                "layer with {rows} outputs needs {rows} biases, got {}",
                bias.len()
            )));
        }
        Ok(Self { rows, cols, weights, bias })
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ g`
    fn transpose_mul(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &gi) in self.weights.chunks_exact(self.cols).zip(g) {
            if gi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
        out
    }
}

/// Feed-forward classifier. The activation is applied between layers, never
/// after the last one, so the output is a vector of logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

/// Per-layer values kept from a forward pass for backpropagation.
pub(crate) struct Tape {
    /// Input to each layer (post-activation of the previous one).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pub pre: Vec<Vec<f64>>,
}

impl Model {
    pub fn new(activation: Activation, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].rows != pair[1].cols {
                return Err(Error::InvalidModel(format!(
                    "layer output {} does not chain into input {}",
                    pair[0].rows, pair[1].cols
                )));
            }
        }
        for layer in &layers {
            Layer::new(layer.rows, layer.cols, layer.weights.clone(), layer.bias.clone())?;
        }
        let model = Self { activation, layers };
        if model.num_classes() < 2 {
            return Err(Error::InvalidModel("need at least two classes".into()));
        }
        Ok(model)
    }

    /// Single affine layer `logits = W x + b`.
    pub fn linear(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        Self::new(Activation::Identity, vec![Layer::new(rows, cols, weights, bias)?])
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.affine(&h);
            if i < last {
                h.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        Ok(h)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.forward(x)?;
        Ok(argmax(&logits))
    }

    pub(crate) fn forward_tape(&self, x: &[f64]) -> Tape {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&h);
            inputs.push(h);
            h = if i < last { z.iter().map(|&v| self.activation.apply(v)).collect() } else { z.clone() };
            pre.push(z);
        }
        Tape { inputs, pre }
    }

    /// Backpropagates `dL/dlogits` through the tape. Returns the input
    /// gradient and, on request, a per-layer `(dW, db)` list.
    pub(crate) fn backward(
        &self,
        tape: &Tape,
        upstream: &[f64],
        want_params: bool,
    ) -> (Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>) {
        let mut params = Vec::new();
        let mut g = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if want_params {
                let input = &tape.inputs[i];
                let mut dw = vec![0.0; layer.rows * layer.cols];
                for (row, &gi) in dw.chunks_exact_mut(layer.cols).zip(&g) {
                    for (w, x) in row.iter_mut().zip(input) {
                        *w = gi * x;
                    }
                }
                params.push((dw, g.clone()));
            }
            let mut below = layer.transpose_mul(&g);
            if i > 0 {
                for (v, &z) in below.iter_mut().zip(&tape.pre[i - 1]) {
                    *v *= self.activation.derivative(z);
                }
            }
            g = below;
        }
        params.reverse();
        (g, params)
    }

    /// Value and input gradient of `coeffs · logits(x)`.
    pub fn grad_scalar(&self, x: &[f64], coeffs: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        if coeffs.len() != self.num_classes() {
            return Err(Error::DimensionMismatch { expected: self.num_classes(), found: coeffs.len() });
        }
        let tape = self.forward_tape(x);
        let logits = tape.pre.last().expect("non-empty model");
        let value = coeffs.iter().zip(logits).map(|(c, l)| c * l).sum();
        let (grad, _) = self.backward(&tape, coeffs, false);
        Ok((value, grad))
    }

    /// One forward and one backward pass where the output coefficients are
    /// chosen after seeing the logits. Returns `(logits, coeffs, gradient)`.
    pub fn grad_with<F>(&self, x: &[f64], select: F) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
    where
        F: FnOnce(&[f64]) -> Result<Vec<f64>>,
    {
        self.check_input(x)?;
        let tape = self.forward_tape(x);
        let logits = tape.pre.last().expect("non-empty model").clone();
        let coeffs = select(&logits)?;
        if coeffs.len() != logits.len() {
            return Err(Error::DimensionMismatch { expected: logits.len(), found: coeffs.len() });
        }
        let (grad, _) = self.backward(&tape, &coeffs, false);
        Ok((logits, coeffs, grad))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
