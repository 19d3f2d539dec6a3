//! Cyclic amplification: the total scale is split into small factors and each
//! cycle vectorizes the current image into strokes patch by patch, repaints
//! them at the larger size, then runs detail completion.

mod plan;

pub use plan::{plan_scales, ScalePlan, PRODUCT_TOL};

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assp::{self, PainterError};
use crate::decomposer::{self, patch_seed, CemConfig, DecomposeConfig, DecomposeError, ScoreFn};
use crate::detailcomplete::{CompleteError, Completer, CompleterKind, CompletionRequest};
use crate::imagecore::{mse, round_dim, split_patches, stitch_patches_to, Image, ImageError};
use crate::mlpnet::MlpModel;
use crate::strokeengine::{composite_in_place, rasterize_silhouette, Stroke, StrokeError};

#[derive(Debug, Error)]
pub enum CyclicError {
    #[error("scale must be a finite number > 1, got {0}")]
    ScaleTooSmall(f64),
    #[error("factor {factor} outside (1, {s_max}]")]
    FactorOutOfRange { factor: f64, s_max: f64 },
    #[error("factors multiply to {product}, not the requested scale {scale}")]
    ProductMismatch { product: f64, scale: f64 },
    #[error("explicit factor list is empty")]
    EmptyPlan,
    #[error("the implicit renderer needs a painter model")]
    MissingModel,
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Painter(#[from] PainterError),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error(transparent)]
    Complete(#[from] CompleteError),
}

pub type Result<T> = std::result::Result<T, CyclicError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RendererKind {
    #[default]
    Analytic,
    Implicit,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub strokes_per_patch: usize,
    pub patch_size: usize,
    pub renderer: RendererKind,
    /// Painter used when `renderer` is [`RendererKind::Implicit`].
    pub model: Option<Arc<MlpModel>>,
    pub completer: Completer,
    pub score: ScoreFn,
    pub cem: CemConfig,
    pub seed: u64,
    /// Start every canvas black instead of from the patch mean color.
    pub blank_canvas: bool,
    pub context: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strokes_per_patch: 20,
            patch_size: 16,
            renderer: RendererKind::Analytic,
            model: None,
            completer: Completer::new(CompleterKind::Identity),
            score: ScoreFn::NegMse,
            cem: CemConfig::default(),
            seed: 0,
            blank_canvas: false,
            context: None,
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<()> {
        if self.strokes_per_patch == 0 {
            return Err(CyclicError::Config("strokes_per_patch must be at least 1".into()));
        }
        if self.patch_size < 4 {
            return Err(CyclicError::Config("patch_size must be at least 4".into()));
        }
        if self.renderer == RendererKind::Implicit && self.model.is_none() {
            return Err(CyclicError::MissingModel);
        }
        Ok(())
    }

    fn decompose_config(&self) -> DecomposeConfig {
        DecomposeConfig {
            budget: self.strokes_per_patch,
            cem: self.cem.clone(),
            score: self.score.clone(),
            blank_canvas: self.blank_canvas,
        }
    }
}

/// Statistics of one amplification step.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplifyStats {
    pub patches: usize,
    pub accepted_strokes: usize,
    /// Total proposal budget, `patches * strokes_per_patch`.
    pub budget: usize,
    /// Mean patch MSE of the initial and final low-resolution canvases.
    pub mse_before: f64,
    pub mse_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleEntry {
    pub k: usize,
    #[serde(rename = "in")]
    pub input: [usize; 2],
    #[serde(rename = "out")]
    pub output: [usize; 2],
    pub factor: f64,
    pub accepted_strokes: usize,
    pub mse_before: f64,
    pub mse_after: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub scale: f64,
    pub factors: Vec<f64>,
    pub cycles: Vec<CycleEntry>,
}

impl CycleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

fn paint_tile(strokes: &[Stroke], init: [f64; 3], size: usize, cfg: &PipelineConfig) -> Result<Image> {
    let mut canvas = Image::filled(size, size, init);
    for stroke in strokes {
        let silhouette = match cfg.renderer {
            RendererKind::Analytic => rasterize_silhouette(&stroke.shape, size, size)?,
            RendererKind::Implicit => {
                let model = cfg.model.as_ref().ok_or(CyclicError::MissingModel)?;
                assp::render_stroke(model, stroke, size, size)?.0
            }
        };
        composite_in_place(&mut canvas, &silhouette, stroke.color)?;
    }
    Ok(canvas)
}

/// One amplification by `factor` to exactly `out_h x out_w`.
///
/// Strokes are fit on each low-resolution patch and repainted on tiles of
/// `round(patch_size * factor)` pixels, which are then stitched.
pub fn amplify_to(
    image: &Image,
    factor: f64,
    out_h: usize,
    out_w: usize,
    cycle: usize,
    cfg: &PipelineConfig,
) -> Result<(Image, AmplifyStats)> {
    cfg.validate()?;
    if !(factor.is_finite() && factor > 1.0) {
        return Err(CyclicError::FactorOutOfRange { factor, s_max: f64::INFINITY });
    }
    let grid = split_patches(image, cfg.patch_size);
    let tile = round_dim(cfg.patch_size as f64 * factor);
    let dcfg = cfg.decompose_config();
    let cols = grid.cols();

    let results: Vec<Result<(Image, usize, f64, f64)>> = grid
        .patches()
        .par_iter()
        .enumerate()
        .map(|(idx, patch)| {
            let seed = patch_seed(cfg.seed, cycle, idx / cols, idx % cols);
            let seq = decomposer::decompose_patch(patch, &dcfg, seed)?;
            let init = if cfg.blank_canvas { [0.0; 3] } else { patch.mean_color() };
            let painted = paint_tile(&seq.strokes, init, tile, cfg)?;
            let before = mse(&seq.initial_canvas, patch)?;
            let after = mse(&seq.canvas, patch)?;
            Ok((painted, seq.accepted(), before, after))
        })
        .collect();

    let n = results.len();
    let mut tiles = Vec::with_capacity(n);
    let (mut accepted, mut before, mut after) = (0, 0.0, 0.0);
    for r in results {
        let (t, a, b, c) = r?;
        tiles.push(t);
        accepted += a;
        before += b;
        after += c;
    }
    let out = stitch_patches_to(&grid.with_patches(tiles), factor, out_h, out_w)?;
    Ok((
        out,
        AmplifyStats {
            patches: n,
            accepted_strokes: accepted,
            budget: n * cfg.strokes_per_patch,
            mse_before: before / n as f64,
            mse_after: after / n as f64,
        },
    ))
}

/// One amplification to `round(h * factor) x round(w * factor)`.
pub fn amplify_once(image: &Image, factor: f64, cfg: &PipelineConfig) -> Result<(Image, AmplifyStats)> {
    let (h, w) = image.dims();
    amplify_to(image, factor, round_dim(h as f64 * factor).max(1), round_dim(w as f64 * factor).max(1), 0, cfg)
}

/// Runs every cycle of `plan`: amplify, then complete. The output is exactly
/// `round(h * s) x round(w * s)`.
pub fn run_cycles(image: &Image, plan: &ScalePlan, cfg: &PipelineConfig) -> Result<(Image, CycleReport)> {
    cfg.validate()?;
    let (h0, w0) = image.dims();
    let dims = plan.cycle_dims(h0, w0);
    let context = cfg.context.clone().unwrap_or_default();
    let mut current = image.clone();
    let mut cycles = Vec::with_capacity(plan.len());
    for (k, (&factor, &(oh, ow))) in plan.factors.iter().zip(&dims).enumerate() {
        let start = Instant::now();
        let input = current.dims();
        let (painted, stats) = amplify_to(&current, factor, oh, ow, k, cfg)?;
        let request = CompletionRequest {
            painted,
            context_text: context.clone(),
            cycle_index: k + 1,
            scale: factor,
        };
        current = cfg.completer.run(&request)?;
        log::info!(
            "cycle {}: {}x{} -> {}x{} (x{factor}), {} strokes",
            k + 1,
            input.0,
            input.1,
            oh,
            ow,
            stats.accepted_strokes
        );
        cycles.push(CycleEntry {
            k: k + 1,
            input: [input.0, input.1],
            output: [oh, ow],
            factor,
            accepted_strokes: stats.accepted_strokes,
            mse_before: stats.mse_before,
            mse_after: stats.mse_after,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((
        current,
        CycleReport {
            scale: plan.total,
            factors: plan.factors.clone(),
            cycles,
        },
    ))
}
