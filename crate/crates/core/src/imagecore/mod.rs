//! Raster images, PNG I/O, resampling, patch tiling and full-reference metrics.
//!
//! Every image in the crate is an [`Image`]: row-major RGB with channels stored
//! as `f64` in `[0, 1]`.

mod metrics;
mod patches;
mod png_io;
mod resample;

pub use metrics::{edge_sharpness, luma, mse, psnr, psnr_display, ssim, PSNR_DISPLAY_CAP};
pub use patches::{split_patches, stitch_patches, stitch_patches_to, PatchGrid};
pub use png_io::{load_png, save_png, to_png_bytes, from_png_bytes};
pub use resample::{bicubic_resample, box_downsample, catmull_rom};
pub(crate) use resample::area_resample as resample_area;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PNG: {0}")]
    MalformedPng(String),
    #[error("unsupported PNG bit depth: {0}")]
    UnsupportedBitDepth(u8),
    #[error("unsupported PNG color type: {0}")]
    UnsupportedColorType(String),
    #[error("image dimensions must be non-zero (got {0}x{1})")]
    ZeroSize(usize, usize),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image {0}x{1} is smaller than the required {2}x{2}")]
    TooSmall(usize, usize, usize),
    #[error("patch {index} is {h}x{w}, expected {expected}x{expected}")]
    InconsistentPatch {
        index: usize,
        h: usize,
        w: usize,
        expected: usize,
    },
    #[error("pixel buffer has {got} values, expected {expected}")]
    BufferLength { got: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, ImageError>;

/// Round half up, used wherever a pixel dimension is scaled.
pub fn round_dim(v: f64) -> usize {
    (v + 0.5).floor().max(0.0) as usize
}

/// Row-major RGB raster with channels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// A `height x width` image filled with `rgb`.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Self { height, width, data }
    }

    pub fn black(height: usize, width: usize) -> Self {
        Self::filled(height, width, [0.0; 3])
    }

    /// Builds an image from interleaved RGB values. Values are clamped to `[0, 1]`;
    /// NaN becomes 0.
    pub fn from_raw(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        let expected = height * width * 3;
        if data.len() != expected {
            return Err(ImageError::BufferLength {
                got: data.len(),
                expected,
            });
        }
        for v in &mut data {
            *v = clamp01(*v);
        }
        Ok(Self { height, width, data })
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for i in 0..height {
            for j in 0..width {
                let p = f(i, j);
                data.extend(p.iter().map(|&v| clamp01(v)));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// Interleaved RGB values, row-major.
    #[inline]
    pub fn as_raw(&self) -> &[f64] {
        &self.data
    }

    /// Mutable channel access for crate-internal kernels that keep values in `[0, 1]`.
    #[inline]
    pub(crate) fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        let k = (row * self.width + col) * 3;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    /// Sets a pixel, clamping each channel into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, rgb: [f64; 3]) {
        let k = (row * self.width + col) * 3;
        self.data[k] = clamp01(rgb[0]);
        self.data[k + 1] = clamp01(rgb[1]);
        self.data[k + 2] = clamp01(rgb[2]);
    }

    pub fn mean_color(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for px in self.data.chunks_exact(3) {
            acc[0] += px[0];
            acc[1] += px[1];
            acc[2] += px[2];
        }
        let n = self.pixel_count().max(1) as f64;
        [acc[0] / n, acc[1] / n, acc[2] / n]
    }

    /// Copies the `h x w` region whose top-left corner is `(top, left)`.
    ///
    /// # Panics
    /// If the region falls outside the image.
    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Image {
        assert!(top + h <= self.height && left + w <= self.width, "crop out of bounds");
        let mut data = Vec::with_capacity(h * w * 3);
        for i in top..top + h {
            let start = (i * self.width + left) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Image { height: h, width: w, data }
    }

    pub(crate) fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(ImageError::DimensionMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}
