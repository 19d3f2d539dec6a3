//! Analytic stroke engine: quadratic Bézier geometry, anti-aliased silhouette
//! rasterization at any resolution, color layers and alpha-over compositing.
//!
//! Stroke coordinates live in the unit square of the target region. Widths are
//! radii expressed as a fraction of the region's short side and are linearly
//! interpolated along the curve.

mod raster;

pub use raster::{rasterize_silhouette, CurveSampler, Silhouette};

use rand::Rng;
use thiserror::Error;

use crate::imagecore::{Image, ImageError};

pub const W_MIN: f64 = 0.01;
pub const W_MAX: f64 = 0.5;

/// Number of stroke parameters: 6 control-point coordinates, 2 widths, 3 colors.
pub const STROKE_PARAMS: usize = 11;
pub const SHAPE_PARAMS: usize = 8;

#[derive(Debug, Error)]
pub enum StrokeError {
    #[error("curve parameter t = {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("canvas dimensions must be non-zero (got {0}x{1})")]
    ZeroSize(usize, usize),
    #[error("silhouette is {0}x{1} but canvas is {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

pub type Result<T> = std::result::Result<T, StrokeError>;

/// Geometry of a stroke: Bézier control points and start/end radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrokeShape {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub w0: f64,
    pub w1: f64,
}

impl StrokeShape {
    pub fn to_array(&self) -> [f64; SHAPE_PARAMS] {
        [self.x0, self.y0, self.x1, self.y1, self.x2, self.y2, self.w0, self.w1]
    }

    pub fn from_array(p: [f64; SHAPE_PARAMS]) -> Self {
        Self {
            x0: p[0],
            y0: p[1],
            x1: p[2],
            y1: p[3],
            x2: p[4],
            y2: p[5],
            w0: p[6],
            w1: p[7],
        }
    }

    /// Mirrors the shape horizontally inside the unit square.
    pub fn mirrored_x(&self) -> Self {
        Self {
            x0: 1.0 - self.x0,
            x1: 1.0 - self.x1,
            x2: 1.0 - self.x2,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrokeColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl StrokeColor {
    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stroke {
    pub shape: StrokeShape,
    pub color: StrokeColor,
}

impl Stroke {
    /// `[x0, y0, x1, y1, x2, y2, w0, w1, r, g, b]`
    pub fn to_params(&self) -> [f64; STROKE_PARAMS] {
        let s = self.shape.to_array();
        let c = self.color.to_array();
        let mut out = [0.0; STROKE_PARAMS];
        out[..SHAPE_PARAMS].copy_from_slice(&s);
        out[SHAPE_PARAMS..].copy_from_slice(&c);
        out
    }

    pub fn from_params(p: [f64; STROKE_PARAMS]) -> Self {
        let mut s = [0.0; SHAPE_PARAMS];
        s.copy_from_slice(&p[..SHAPE_PARAMS]);
        Self {
            shape: StrokeShape::from_array(s),
            color: StrokeColor::new(p[8], p[9], p[10]),
        }
    }
}

/// Sampling box for all eleven stroke parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeBounds {
    pub coord_min: f64,
    pub coord_max: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for ShapeBounds {
    fn default() -> Self {
        Self {
            coord_min: 0.0,
            coord_max: 1.0,
            w_min: W_MIN,
            w_max: W_MAX,
        }
    }
}

impl ShapeBounds {
    /// Per-parameter `(lo, hi)` in stroke-parameter order. Colors span `[0, 1]`.
    pub fn param_ranges(&self) -> [(f64, f64); STROKE_PARAMS] {
        let c = (self.coord_min, self.coord_max);
        let w = (self.w_min, self.w_max);
        [c, c, c, c, c, c, w, w, (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]
    }

    pub fn clamp(&self, stroke: &Stroke) -> Stroke {
        let ranges = self.param_ranges();
        let mut p = stroke.to_params();
        for (v, (lo, hi)) in p.iter_mut().zip(ranges) {
            *v = v.clamp(lo, hi);
        }
        Stroke::from_params(p)
    }
}

/// `B(t) = (1-t)^2 P0 + 2t(1-t) P1 + t^2 P2`
pub fn bezier_point(shape: &StrokeShape, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(StrokeError::ParameterOutOfRange(t));
    }
    Ok(bezier_unchecked(shape, t))
}

#[inline]
pub(crate) fn bezier_unchecked(s: &StrokeShape, t: f64) -> (f64, f64) {
    let u = 1.0 - t;
    let (a, b, c) = (u * u, 2.0 * t * u, t * t);
    (a * s.x0 + b * s.x1 + c * s.x2, a * s.y0 + b * s.y1 + c * s.y2)
}

/// Linearly interpolated radius `w(t) = (1-t) w0 + t w1`.
#[inline]
pub fn width_at(shape: &StrokeShape, t: f64) -> f64 {
    (1.0 - t) * shape.w0 + t * shape.w1
}

/// A stroke color broadcast over an `h x w` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorLayer {
    height: usize,
    width: usize,
    color: StrokeColor,
}

impl ColorLayer {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn color(&self) -> StrokeColor {
        self.color
    }

    pub fn get(&self, _row: usize, _col: usize) -> [f64; 3] {
        self.color.to_array()
    }

    pub fn to_image(&self) -> Image {
        Image::filled(self.height, self.width, self.color.to_array())
    }
}

pub fn expand_color(color: StrokeColor, h: usize, w: usize) -> Result<ColorLayer> {
    if h == 0 || w == 0 {
        return Err(StrokeError::ZeroSize(h, w));
    }
    Ok(ColorLayer {
        height: h,
        width: w,
        color,
    })
}

/// Alpha-over: `out = (1 - s) * canvas + s * color`, per channel.
pub fn composite_stroke(canvas: &Image, silhouette: &Silhouette, color: StrokeColor) -> Result<Image> {
    let mut out = canvas.clone();
    composite_in_place(&mut out, silhouette, color)?;
    Ok(out)
}

/// In-place form of [`composite_stroke`].
pub fn composite_in_place(canvas: &mut Image, silhouette: &Silhouette, color: StrokeColor) -> Result<()> {
    let (h, w) = canvas.dims();
    if (silhouette.height(), silhouette.width()) != (h, w) {
        return Err(StrokeError::DimensionMismatch(silhouette.height(), silhouette.width(), h, w));
    }
    let rgb = color.to_array();
    let data = canvas.raw_mut();
    for (px, &a) in data.chunks_exact_mut(3).zip(silhouette.values()) {
        if a == 0.0 {
            continue;
        }
        for c in 0..3 {
            px[c] = (1.0 - a) * px[c] + a * rgb[c];
        }
    }
    Ok(())
}

/// Uniform sample of all eleven parameters inside `bounds`.
pub fn random_stroke<R: Rng + ?Sized>(rng: &mut R, bounds: &ShapeBounds) -> Stroke {
    let mut p = [0.0; STROKE_PARAMS];
    for (v, (lo, hi)) in p.iter_mut().zip(bounds.param_ranges()) {
        *v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    }
    Stroke::from_params(p)
}
