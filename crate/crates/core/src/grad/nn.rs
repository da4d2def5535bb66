use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    /// max(x, 0.2x)
    LeakyRelu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map followed by an element-wise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: DMatrix<f64>, biases: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::ShapeMismatch(format!("{} outputs but {} biases", weights.nrows(), biases.len())));
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite layer parameter".into()));
        }
        Ok(Self { weights, biases, activation })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut crate::rng::Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = DMatrix::from_fn(outputs, inputs, |_, _| rng.random_range(-limit..=limit));
        Self { weights, biases: DVector::zeros(outputs), activation }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Cached values from a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<DVector<f64>>,
    pre: Vec<DVector<f64>>,
    post: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
}

pub fn dense_forward(layers: &[DenseLayer], x: &[f64]) -> Result<(Vec<f64>, Tape)> {
    let mut tape = Tape { inputs: Vec::with_capacity(layers.len()), pre: Vec::new(), post: Vec::new() };
    let mut a = DVector::from_column_slice(x);
    for (l, layer) in layers.iter().enumerate() {
        if layer.inputs() != a.len() {
            return Err(Error::ShapeMismatch(format!("layer {l} expects {} inputs, got {}", layer.inputs(), a.len())));
        }
        let z = &layer.weights * &a + &layer.biases;
        let out = z.map(|v| layer.activation.apply(v));
        tape.inputs.push(a);
        tape.pre.push(z);
        tape.post.push(out.clone());
        a = out;
    }
    Ok((a.as_slice().to_vec(), tape))
}

/// Reverse pass: gradients of every layer's parameters and of the input,
/// given ∂L/∂output.
pub fn dense_backward(layers: &[DenseLayer], tape: &Tape, upstream: &[f64]) -> Result<(Vec<LayerGrad>, Vec<f64>)> {
    if tape.pre.len() != layers.len() {
        return Err(Error::ShapeMismatch("tape does not match the layer stack".into()));
    }
    let last = layers.last().ok_or_else(|| Error::ShapeMismatch("empty layer stack".into()))?;
    if upstream.len() != last.outputs() {
        return Err(Error::ShapeMismatch(format!("upstream has {} entries, output has {}", upstream.len(), last.outputs())));
    }
    let mut grads = Vec::with_capacity(layers.len());
    let mut delta_out = DVector::from_column_slice(upstream);
    for (l, layer) in layers.iter().enumerate().rev() {
        let z = &tape.pre[l];
        let a = &tape.post[l];
        let delta = DVector::from_fn(z.len(), |i, _| delta_out[i] * layer.activation.derivative(z[i], a[i]));
        let weights = &delta * tape.inputs[l].transpose();
        delta_out = layer.weights.tr_mul(&delta);
        grads.push(LayerGrad { weights, biases: delta });
    }
    grads.reverse();
    Ok((grads, delta_out.as_slice().to_vec()))
}
