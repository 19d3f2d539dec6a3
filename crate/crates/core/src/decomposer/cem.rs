use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{paint, score, AgentState, DecomposeError, Proposal, Result, ScoreFn, StrokeProposer};
use crate::imagecore::Image;
use crate::strokeengine::{ShapeBounds, Stroke, SHAPE_PARAMS, STROKE_PARAMS};

#[derive(Clone, Debug, PartialEq)]
pub struct CemConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    /// Floor on every per-parameter standard deviation.
    pub sigma_min: f64,
    pub bounds: ShapeBounds,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            population: 64,
            elite_fraction: 0.125,
            iterations: 10,
            sigma_min: 1e-3,
            bounds: ShapeBounds::default(),
        }
    }
}

impl CemConfig {
    pub fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).round() as usize).clamp(1, self.population)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DecomposeError::Config(m.to_string()));
        if self.population == 0 || self.iterations == 0 {
            return bad("population and iterations must be positive");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return bad("elite fraction must be in (0, 1]");
        }
        if !(self.sigma_min >= 0.0 && self.sigma_min.is_finite()) {
            return bad("sigma_min must be finite and non-negative");
        }
        Ok(())
    }
}

/// Cross-entropy-method search over the eleven stroke parameters.
pub struct CemProposer {
    config: CemConfig,
    rng: ChaCha8Rng,
}

impl CemProposer {
    pub fn new(config: CemConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

/// Target mean weighted by per-pixel residual `sum_c |target - canvas|`;
/// plain target mean when the canvas already matches.
fn residual_color(target: &Image, canvas: &Image) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for (t, c) in target.as_raw().chunks_exact(3).zip(canvas.as_raw().chunks_exact(3)) {
        let w: f64 = (0..3).map(|k| (t[k] - c[k]).abs()).sum();
        for k in 0..3 {
            acc[k] += w * t[k];
        }
        total += w;
    }
    if total > 0.0 {
        acc.map(|v| v / total)
    } else {
        target.mean_color()
    }
}

impl StrokeProposer for CemProposer {
    fn propose(&mut self, state: &AgentState<'_>, score_fn: &ScoreFn) -> Result<Proposal> {
        let cfg = &self.config;
        state.canvas.ensure_same_dims(state.target)?;
        let ranges = cfg.bounds.param_ranges();
        let base = score(state.canvas, state.target, score_fn)?;

        let mut mean = [0.0; STROKE_PARAMS];
        let mut std = [0.0; STROKE_PARAMS];
        for (k, (lo, hi)) in ranges.iter().enumerate() {
            mean[k] = 0.5 * (lo + hi);
            std[k] = 0.5 * (hi - lo);
        }
        let color = residual_color(state.target, state.canvas);
        mean[SHAPE_PARAMS..].copy_from_slice(&color);
        std[SHAPE_PARAMS..].fill(0.25);

        let n_elite = cfg.elite_count();
        let mut best: Option<Proposal> = None;
        let mut samples = Vec::with_capacity(cfg.population);
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(cfg.population);
        for _ in 0..cfg.iterations {
            samples.clear();
            for _ in 0..cfg.population {
                let mut p = [0.0; STROKE_PARAMS];
                for k in 0..STROKE_PARAMS {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    p[k] = (mean[k] + std[k] * z).clamp(ranges[k].0, ranges[k].1);
                }
                samples.push(p);
            }

            scored.clear();
            for (idx, p) in samples.iter().enumerate() {
                let stroke = Stroke::from_params(*p);
                let next = paint(state.canvas, &stroke)?;
                let r = score(&next, state.target, score_fn)? - base;
                let r = if r.is_nan() { f64::NEG_INFINITY } else { r };
                scored.push((idx, r));
                if best.map_or(true, |b| r > b.reward) {
                    best = Some(Proposal { stroke, reward: r });
                }
            }

            // Stable sort keeps the lower index first among equal rewards.
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            let elites = &scored[..n_elite];
            for k in 0..STROKE_PARAMS {
                let m = elites.iter().map(|&(i, _)| samples[i][k]).sum::<f64>() / n_elite as f64;
                let var = elites.iter().map(|&(i, _)| (samples[i][k] - m).powi(2)).sum::<f64>() / n_elite as f64;
                mean[k] = m;
                std[k] = var.sqrt().max(cfg.sigma_min);
            }
        }
        Ok(best.expect("at least one candidate is evaluated"))
    }
}

/// One CEM proposal for `state`, seeded by `seed`.
pub fn propose_stroke(state: &AgentState<'_>, config: &CemConfig, score_fn: &ScoreFn, seed: u64) -> Result<Proposal> {
    CemProposer::new(config.clone(), seed)?.propose(state, score_fn)
}
