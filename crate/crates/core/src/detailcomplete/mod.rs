//! Post-painting detail completion behind a small interface: identity, a local
//! unsharp mask, or a remote HTTP service.

mod remote;

pub use remote::{complete_remote, CompleteRequestBody, CompleteResponseBody};

use std::time::Duration;

use thiserror::Error;

use crate::imagecore::{clamp01, Image, ImageError};

#[derive(Debug, Error)]
pub enum CompleteError {
    #[error("invalid completer: {0}")]
    InvalidKind(String),
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("could not connect to completion service: {0}")]
    Connect(String),
    #[error("completion service timed out: {0}")]
    Timeout(String),
    #[error("completion service protocol error: {0}")]
    Protocol(String),
    #[error("completion service returned {got_h}x{got_w}, expected {h}x{w}")]
    DimensionMismatch { h: usize, w: usize, got_h: usize, got_w: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl CompleteError {
    /// Failures that originate from the remote service.
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            CompleteError::Connect(_) | CompleteError::Timeout(_) | CompleteError::Protocol(_) | CompleteError::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, CompleteError>;

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionRequest {
    pub painted: Image,
    pub context_text: String,
    pub cycle_index: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompleterKind {
    Identity,
    /// `x + amount * (x - blur(x))` with a Gaussian of sigma `radius` pixels.
    Unsharp { radius: f64, amount: f64 },
    Remote { endpoint: String, timeout: Duration },
}

impl CompleterKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            CompleterKind::Identity => Ok(()),
            CompleterKind::Unsharp { radius, amount } => {
                if !(radius.is_finite() && *radius >= 1.0) {
                    return Err(CompleteError::InvalidKind(format!("unsharp radius {radius} must be >= 1")));
                }
                if !(0.0..=4.0).contains(amount) {
                    return Err(CompleteError::InvalidKind(format!("unsharp amount {amount} must be in [0, 4]")));
                }
                Ok(())
            }
            CompleterKind::Remote { endpoint, timeout } => {
                if endpoint.is_empty() {
                    return Err(CompleteError::InvalidKind("remote endpoint is empty".into()));
                }
                if timeout.is_zero() {
                    return Err(CompleteError::InvalidKind("remote timeout must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

/// Runs one completion. Output dimensions always equal the input's.
pub fn complete(request: &CompletionRequest, kind: &CompleterKind) -> Result<Image> {
    kind.validate()?;
    if !(request.scale > 1.0 && request.scale.is_finite()) {
        return Err(CompleteError::InvalidRequest(format!("scale {} must be > 1", request.scale)));
    }
    match kind {
        CompleterKind::Identity => Ok(request.painted.clone()),
        CompleterKind::Unsharp { radius, amount } => Ok(unsharp_mask(&request.painted, *radius, *amount)),
        CompleterKind::Remote { endpoint, timeout } => complete_remote(request, endpoint, *timeout),
    }
}

/// A completer with the optional fall-back-to-identity policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Completer {
    pub kind: CompleterKind,
    pub fallback: bool,
}

impl Completer {
    pub fn new(kind: CompleterKind) -> Self {
        Self { kind, fallback: false }
    }

    /// With `fallback` set, remote failures log a warning and return the
    /// painted image unchanged.
    pub fn run(&self, request: &CompletionRequest) -> Result<Image> {
        match complete(request, &self.kind) {
            Err(e) if self.fallback && e.is_remote() => {
                log::warn!("detail completion failed in cycle {}, keeping painted image: {e}", request.cycle_index);
                Ok(request.painted.clone())
            }
            other => other,
        }
    }
}

/// Context text for the completer: the configured text, or empty.
pub fn extract_context(_image: &Image, configured: Option<&str>) -> String {
    configured.unwrap_or_default().to_string()
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-half..=half).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamped borders.
pub fn gaussian_blur(image: &Image, sigma: f64) -> Image {
    let (h, w) = image.dims();
    let kernel = gaussian_kernel(sigma);
    let half = (kernel.len() / 2) as isize;
    let src = image.as_raw();
    let mut tmp = vec![0.0; src.len()];
    for i in 0..h {
        for j in 0..w {
            let mut acc = [0.0; 3];
            for (t, &kv) in kernel.iter().enumerate() {
                let jj = (j as isize + t as isize - half).clamp(0, w as isize - 1) as usize;
                let p = &src[(i * w + jj) * 3..][..3];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            tmp[(i * w + j) * 3..][..3].copy_from_slice(&acc);
        }
    }
    let mut out = vec![0.0; src.len()];
    for i in 0..h {
        for j in 0..w {
            let mut acc = [0.0; 3];
            for (t, &kv) in kernel.iter().enumerate() {
                let ii = (i as isize + t as isize - half).clamp(0, h as isize - 1) as usize;
                let p = &tmp[(ii * w + j) * 3..][..3];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            out[(i * w + j) * 3..][..3].copy_from_slice(&acc);
        }
    }
    Image::from_raw(h, w, out).expect("same length")
}

pub fn unsharp_mask(image: &Image, radius: f64, amount: f64) -> Image {
    if amount == 0.0 {
        return image.clone();
    }
    let blurred = gaussian_blur(image, radius);
    let data = image
        .as_raw()
        .iter()
        .zip(blurred.as_raw())
        .map(|(&x, &b)| clamp01(x + amount * (x - b)))
        .collect();
    Image::from_raw(image.height(), image.width(), data).expect("same length")
}
