//! Fully-connected network with ReLU hidden layers and a sigmoid output, with
//! hand-written reverse-mode gradients and an Adam optimizer.
//!
//! Parameters are generic over the float type: models are stored and trained
//! in `f32` ([`MlpModel`]); the `f64` instantiation exists for gradient checks.

mod adam;
mod io;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC};

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::Float;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid layer dims {0:?}: need at least two layers, all non-zero")]
    InvalidDims(Vec<usize>),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("bad model magic")]
    BadMagic,
    #[error("model file truncated: {0}")]
    Truncated(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MlpError>;

/// Float types the network can be instantiated with.
pub trait Scalar:
    Float + LinalgScalar + ScalarOperand + std::ops::AddAssign + Debug + Send + Sync + 'static
{
}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// One affine layer; `weights` is `[in, out]` so a batch multiplies on the left.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    layer_dims: Vec<usize>,
    layers: Vec<Layer<T>>,
}

/// Silhouette query network, 32-bit.
pub type MlpModel = Mlp<f32>;

/// Parameter gradients, shaped like the model's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &Mlp<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.nrows(), l.weights.ncols()))
                .collect(),
        }
    }

    /// Accumulates `other` into `self`.
    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, k: T) {
        for l in &mut self.layers {
            l.weights.mapv_inplace(|v| v * k);
            l.bias.mapv_inplace(|v| v * k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }
}

/// Activations recorded by a forward pass: `activations[0]` is the input,
/// `activations[l]` the output of layer `l`.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    activations: Vec<Array2<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("trace holds at least the input")
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
        return Err(MlpError::InvalidDims(dims.to_vec()));
    }
    Ok(())
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Scalar> Mlp<T> {
    /// He-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        validate_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || {
                    T::from(rng.gen_range(-limit..limit)).expect("float conversion")
                });
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    /// Assembles a model from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(MlpError::InvalidDims(vec![]));
        }
        let mut dims = vec![layers[0].weights.nrows()];
        for (k, l) in layers.iter().enumerate() {
            if l.weights.nrows() != *dims.last().unwrap() || l.bias.len() != l.weights.ncols() {
                return Err(MlpError::ShapeMismatch(format!("layer {k} does not chain")));
            }
            dims.push(l.weights.ncols());
        }
        validate_dims(&dims)?;
        let model = Self {
            layer_dims: dims,
            layers,
        };
        if !model.is_finite() {
            return Err(MlpError::NonFinite("parameters"));
        }
        Ok(model)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    /// Converts every parameter to another float type.
    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        let conv = |v: &T| U::from(*v).expect("float conversion");
        Mlp {
            layer_dims: self.layer_dims.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.map(conv),
                    bias: l.bias.map(conv),
                })
                .collect(),
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                got: cols,
            });
        }
        Ok(())
    }

    /// `batch` is `[N, in]`; returns `[N, out]` in `(0, 1)`.
    pub fn forward(&self, batch: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(batch.ncols())?;
        let last = self.layers.len() - 1;
        let mut x = batch.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weights);
            z += &layer.bias;
            if k == last {
                z.mapv_inplace(sigmoid);
            } else {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            x = z;
        }
        Ok(x)
    }

    /// Forward pass keeping every activation for a later backward pass.
    pub fn forward_trace(&self, batch: ArrayView2<T>) -> Result<ForwardTrace<T>> {
        self.check_input(batch.ncols())?;
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.to_owned());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = activations[k].dot(&layer.weights);
            z += &layer.bias;
            if k == last {
                z.mapv_inplace(sigmoid);
            } else {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            activations.push(z);
        }
        Ok(ForwardTrace { activations })
    }

    /// Gradient of `sum(upstream * forward(batch))` with respect to every
    /// parameter, i.e. the vector-Jacobian product for `upstream = dL/d output`.
    pub fn backward(&self, batch: ArrayView2<T>, upstream: ArrayView2<T>) -> Result<Gradients<T>> {
        let trace = self.forward_trace(batch)?;
        self.backward_trace(&trace, upstream)
    }

    /// Backward pass from a recorded trace.
    pub fn backward_trace(&self, trace: &ForwardTrace<T>, upstream: ArrayView2<T>) -> Result<Gradients<T>> {
        let out = trace.output();
        if upstream.dim() != out.dim() {
            return Err(MlpError::ShapeMismatch(format!(
                "upstream {:?} vs output {:?}",
                upstream.dim(),
                out.dim()
            )));
        }
        if trace.activations.len() != self.layers.len() + 1 {
            return Err(MlpError::ShapeMismatch("trace from a different model".into()));
        }

        // sigmoid'(z) = s (1 - s)
        let mut delta = upstream.to_owned();
        Zip::from(&mut delta)
            .and(out)
            .for_each(|d, &s| *d = *d * s * (T::one() - s));

        let mut grads: Vec<Layer<T>> = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let input = &trace.activations[k];
            let weights = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut next = delta.dot(&self.layers[k].weights.t());
                // ReLU'(z) is 1 where the recorded activation is positive.
                Zip::from(&mut next)
                    .and(input)
                    .for_each(|d, &a| {
                        if a <= T::zero() {
                            *d = T::zero();
                        }
                    });
                delta = next;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}
