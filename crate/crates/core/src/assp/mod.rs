//! Arbitrary-scale stroke painter: an MLP queried at pixel-center coordinates
//! that predicts a stroke's silhouette at any canvas resolution.
//!
//! Each query row is laid out as
//!
//! ```text
//! [x0 y0 x1 y1 x2 y2 w0 w1 | x' y' | sin/cos(2^l pi x'), sin/cos(2^l pi y') for l < L | c_h c_w]
//! ```
//!
//! giving `12 + 4L` inputs, where `(x', y')` is the normalized pixel center and
//! `(c_h, c_w) = (1/h, 1/w)` the pixel size. The network is trained by L1
//! regression against [`rasterize_silhouette`](crate::strokeengine::rasterize_silhouette).

mod train;

pub use train::{evaluate_painter, train_painter, train_painter_with, PainterConfig, PainterTrainer, StepReport, TrainOutcome};

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use crate::mlpnet::{self, MlpError, MlpModel};
use crate::strokeengine::{expand_color, ColorLayer, Silhouette, Stroke, StrokeError, StrokeShape, SHAPE_PARAMS};

#[derive(Debug, Error)]
pub enum PainterError {
    #[error("model expects {got} inputs, which is not 12 + 4L for any L")]
    InputLayout { got: usize },
    #[error("model must have a single output, has {0}")]
    OutputDim(usize),
    #[error("canvas dimensions must be non-zero (got {0}x{1})")]
    ZeroSize(usize, usize),
    #[error("invalid painter config: {0}")]
    Config(String),
    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] MlpError),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
}

pub type Result<T> = std::result::Result<T, PainterError>;

/// Inputs that are not positional-encoding features.
const BASE_INPUTS: usize = SHAPE_PARAMS + 2 + 2;

/// Network input width for `freqs` positional-encoding frequencies.
pub fn input_dim(freqs: usize) -> usize {
    BASE_INPUTS + 4 * freqs
}

/// Recovers the number of encoding frequencies from a model's input width.
pub fn encoding_freqs(model: &MlpModel) -> Result<usize> {
    if model.output_dim() != 1 {
        return Err(PainterError::OutputDim(model.output_dim()));
    }
    let d = model.input_dim();
    if d < BASE_INPUTS || (d - BASE_INPUTS) % 4 != 0 {
        return Err(PainterError::InputLayout { got: d });
    }
    Ok((d - BASE_INPUTS) / 4)
}

/// Normalized pixel-center coordinates and the pixel size of the canvas they
/// were taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryGrid {
    coords: Vec<(f64, f64)>,
    cell: (f64, f64),
}

impl QueryGrid {
    /// Every pixel center of an `h x w` canvas, row-major.
    pub fn full(h: usize, w: usize) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(PainterError::ZeroSize(h, w));
        }
        let coords = (0..h)
            .flat_map(|i| (0..w).map(move |j| ((j as f64 + 0.5) / w as f64, (i as f64 + 0.5) / h as f64)))
            .collect();
        Ok(Self {
            coords,
            cell: (1.0 / h as f64, 1.0 / w as f64),
        })
    }

    /// Selected pixels `(row, col)` of an `h x w` canvas.
    pub fn pixels(h: usize, w: usize, pixels: &[(usize, usize)]) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(PainterError::ZeroSize(h, w));
        }
        let coords = pixels
            .iter()
            .map(|&(i, j)| ((j as f64 + 0.5) / w as f64, (i as f64 + 0.5) / h as f64))
            .collect();
        Ok(Self {
            coords,
            cell: (1.0 / h as f64, 1.0 / w as f64),
        })
    }

    /// `(x', y')` pairs.
    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    /// `(c_h, c_w)`.
    pub fn cell(&self) -> (f64, f64) {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Reorders coordinates; used to check batch-order independence.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            coords: order.iter().map(|&k| self.coords[k]).collect(),
            cell: self.cell,
        }
    }
}

/// Writes the feature rows for `shape` at `grid` into `out`, one row per coordinate.
pub(crate) fn encode_into(shape: &StrokeShape, coords: &[(f64, f64)], cell: (f64, f64), freqs: usize, out: &mut [f32]) {
    let width = input_dim(freqs);
    debug_assert_eq!(out.len(), coords.len() * width);
    let s = shape.to_array();
    for (row, &(x, y)) in out.chunks_exact_mut(width).zip(coords) {
        for (dst, v) in row[..SHAPE_PARAMS].iter_mut().zip(s) {
            *dst = v as f32;
        }
        row[SHAPE_PARAMS] = x as f32;
        row[SHAPE_PARAMS + 1] = y as f32;
        let mut k = SHAPE_PARAMS + 2;
        for l in 0..freqs {
            let f = (1u64 << l) as f64 * PI;
            let (sx, cx) = (f * x).sin_cos();
            let (sy, cy) = (f * y).sin_cos();
            row[k] = sx as f32;
            row[k + 1] = cx as f32;
            row[k + 2] = sy as f32;
            row[k + 3] = cy as f32;
            k += 4;
        }
        row[k] = cell.0 as f32;
        row[k + 1] = cell.1 as f32;
    }
}

/// Feature matrix `[len, 12 + 4L]` for one stroke over a query grid.
pub fn encode_queries(shape: &StrokeShape, grid: &QueryGrid, freqs: usize) -> Array2<f32> {
    let width = input_dim(freqs);
    let mut data = vec![0.0f32; grid.len() * width];
    encode_into(shape, &grid.coords, grid.cell, freqs, &mut data);
    Array2::from_shape_vec((grid.len(), width), data).expect("row layout")
}

/// Predicted silhouette value in `(0, 1)` at every grid coordinate.
pub fn query_silhouette(model: &MlpModel, shape: &StrokeShape, grid: &QueryGrid) -> Result<Vec<f64>> {
    let freqs = encoding_freqs(model)?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let features = encode_queries(shape, grid, freqs);
    let out = model.forward(features.view())?;
    Ok(out.iter().map(|&v| v as f64).collect())
}

/// Renders a stroke's silhouette with the painter and its broadcast color
/// layer. Compositing is left to the caller.
pub fn render_stroke(model: &MlpModel, stroke: &Stroke, h: usize, w: usize) -> Result<(Silhouette, ColorLayer)> {
    let grid = QueryGrid::full(h, w)?;
    let values = query_silhouette(model, &stroke.shape, &grid)?;
    let silhouette = Silhouette::from_values(h, w, values);
    let color = expand_color(stroke.color, h, w)?;
    Ok((silhouette, color))
}

pub fn save_painter(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    encoding_freqs(model)?;
    Ok(mlpnet::save_model(model, path)?)
}

/// Loads a painter and checks that its input width fits the query layout.
pub fn load_painter(path: impl AsRef<Path>) -> Result<MlpModel> {
    let model = mlpnet::load_model(path)?;
    encoding_freqs(&model)?;
    Ok(model)
}
