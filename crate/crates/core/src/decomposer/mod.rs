//! Stroke decomposition: greedily picks strokes that raise a canvas score
//! against a target patch, one proposal per step.
//!
//! The proposer is a cross-entropy-method search over the eleven stroke
//! parameters. Anything implementing [`StrokeProposer`] can replace it.

mod cem;

pub use cem::{propose_stroke, CemConfig, CemProposer};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::imagecore::{mse, Image, ImageError};
use crate::strokeengine::{composite_in_place, rasterize_silhouette, Stroke, StrokeError};

/// Minimum reward for a proposal to be painted.
pub const ACCEPT_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("stroke budget must be at least 1")]
    ZeroBudget,
    #[error("invalid proposer config: {0}")]
    Config(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
}

pub type Result<T> = std::result::Result<T, DecomposeError>;

type ScoreClosure = dyn Fn(&Image, &Image) -> f64 + Send + Sync;

/// Canvas-vs-target score; higher is better.
#[derive(Clone, Default)]
pub enum ScoreFn {
    /// Negative mean squared error over all channels.
    #[default]
    NegMse,
    Custom(Arc<ScoreClosure>),
}

impl ScoreFn {
    pub fn custom(f: impl Fn(&Image, &Image) -> f64 + Send + Sync + 'static) -> Self {
        ScoreFn::Custom(Arc::new(f))
    }
}

impl fmt::Debug for ScoreFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreFn::NegMse => f.write_str("NegMse"),
            ScoreFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

pub fn score(canvas: &Image, target: &Image, score_fn: &ScoreFn) -> Result<f64> {
    match score_fn {
        ScoreFn::NegMse => Ok(-mse(canvas, target)?),
        ScoreFn::Custom(f) => {
            canvas.ensure_same_dims(target)?;
            Ok(f(canvas, target))
        }
    }
}

/// `score(next) - score(prev)`.
pub fn reward(prev: &Image, next: &Image, target: &Image, score_fn: &ScoreFn) -> Result<f64> {
    Ok(score(next, target, score_fn)? - score(prev, target, score_fn)?)
}

/// What a proposer sees: the target, the current canvas at target resolution,
/// and progress through the budget.
#[derive(Clone, Copy, Debug)]
pub struct AgentState<'a> {
    pub target: &'a Image,
    pub canvas: &'a Image,
    pub step: usize,
    pub budget: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proposal {
    pub stroke: Stroke,
    /// Reward of painting `stroke` onto the state's canvas.
    pub reward: f64,
}

pub trait StrokeProposer {
    fn propose(&mut self, state: &AgentState<'_>, score_fn: &ScoreFn) -> Result<Proposal>;
}

/// Paints `stroke` onto a copy of `canvas` at the canvas resolution.
pub fn paint(canvas: &Image, stroke: &Stroke) -> Result<Image> {
    let mut out = canvas.clone();
    let (h, w) = canvas.dims();
    let sil = rasterize_silhouette(&stroke.shape, h, w)?;
    composite_in_place(&mut out, &sil, stroke.color)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DecomposeConfig {
    pub budget: usize,
    pub cem: CemConfig,
    pub score: ScoreFn,
    /// Start from black instead of the target's mean color.
    pub blank_canvas: bool,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            budget: 20,
            cem: CemConfig::default(),
            score: ScoreFn::NegMse,
            blank_canvas: false,
        }
    }
}

/// Accepted strokes of one patch with their rewards and the score trail.
#[derive(Clone, Debug)]
pub struct StrokeSequence {
    pub strokes: Vec<Stroke>,
    pub rewards: Vec<f64>,
    /// Score after initialization and after every budget step, accepted or not.
    pub scores: Vec<f64>,
    pub skipped: usize,
    pub initial_canvas: Image,
    pub canvas: Image,
}

impl StrokeSequence {
    pub fn accepted(&self) -> usize {
        self.strokes.len()
    }

    pub fn initial_score(&self) -> f64 {
        self.scores[0]
    }

    pub fn final_score(&self) -> f64 {
        *self.scores.last().expect("scores start with the initial canvas")
    }
}

/// Initial canvas for a target: its mean color, or black.
pub fn initial_canvas(target: &Image, blank: bool) -> Image {
    let (h, w) = target.dims();
    if blank {
        Image::black(h, w)
    } else {
        Image::filled(h, w, target.mean_color())
    }
}

/// Greedy decomposition with the default CEM proposer seeded by `seed`.
pub fn decompose_patch(target: &Image, config: &DecomposeConfig, seed: u64) -> Result<StrokeSequence> {
    let mut proposer = CemProposer::new(config.cem.clone(), seed)?;
    decompose_with(target, config, &mut proposer)
}

/// Runs exactly `config.budget` proposal steps; a proposal is painted only
/// when its reward exceeds [`ACCEPT_EPS`].
pub fn decompose_with(target: &Image, config: &DecomposeConfig, proposer: &mut impl StrokeProposer) -> Result<StrokeSequence> {
    if config.budget == 0 {
        return Err(DecomposeError::ZeroBudget);
    }
    let initial = initial_canvas(target, config.blank_canvas);
    let mut canvas = initial.clone();
    let mut current = score(&canvas, target, &config.score)?;
    let mut seq = StrokeSequence {
        strokes: Vec::new(),
        rewards: Vec::new(),
        scores: vec![current],
        skipped: 0,
        initial_canvas: initial,
        canvas: Image::black(1, 1),
    };
    for step in 0..config.budget {
        let state = AgentState {
            target,
            canvas: &canvas,
            step,
            budget: config.budget,
        };
        let proposal = proposer.propose(&state, &config.score)?;
        if proposal.reward > ACCEPT_EPS {
            let next = paint(&canvas, &proposal.stroke)?;
            let next_score = score(&next, target, &config.score)?;
            let r = next_score - current;
            if r > ACCEPT_EPS {
                canvas = next;
                current = next_score;
                seq.strokes.push(proposal.stroke);
                seq.rewards.push(r);
                seq.scores.push(current);
                continue;
            }
        }
        seq.skipped += 1;
        seq.scores.push(current);
    }
    seq.canvas = canvas;
    Ok(seq)
}

/// Deterministic per-patch seed, independent of processing order.
pub fn patch_seed(seed: u64, cycle: usize, row: usize, col: usize) -> u64 {
    let mut h = seed;
    for v in [cycle as u64, row as u64, col as u64] {
        h = splitmix64(h ^ splitmix64(v));
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
