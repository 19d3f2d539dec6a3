use super::{bezier_unchecked, width_at, Result, StrokeError, StrokeShape};
use crate::imagecore::resample_area;

/// Polyline resolution used to estimate curve length before sampling.
const LENGTH_SEGMENTS: usize = 32;
const MIN_SAMPLES: usize = 8;
const SAMPLES_PER_PIXEL: f64 = 4.0;
/// Width of the linear anti-alias ramp, in pixels.
const AA_BAND: f64 = 1.0;

/// Single-channel coverage map in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Silhouette {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Silhouette {
    pub fn filled(height: usize, width: usize, v: f64) -> Self {
        Self {
            height,
            width,
            values: vec![v.clamp(0.0, 1.0); height * width],
        }
    }

    /// Wraps row-major values, clamping each into `[0, 1]`.
    pub fn from_values(height: usize, width: usize, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), height * width, "silhouette buffer length");
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self { height, width, values }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// Area-average resampling to `out_h x out_w`.
    pub fn box_downsample(&self, out_h: usize, out_w: usize) -> Silhouette {
        if (out_h, out_w) == (self.height, self.width) {
            return self.clone();
        }
        let values = resample_area(&self.values, self.height, self.width, 1, out_h, out_w);
        Silhouette::from_values(out_h, out_w, values)
    }

    pub fn mean_abs_diff(&self, other: &Silhouette) -> f64 {
        assert_eq!((self.height, self.width), (other.height, other.width));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.values.len() as f64
    }
}

/// A stroke's centerline densely sampled in the pixel frame of an `h x w`
/// canvas, ready for coverage queries at arbitrary pixel positions.
#[derive(Clone, Debug)]
pub struct CurveSampler {
    points: Vec<(f64, f64)>,
    radii: Vec<f64>,
    /// Pixel-space box outside which coverage is zero.
    reach: (f64, f64, f64, f64),
}

impl CurveSampler {
    pub fn new(shape: &StrokeShape, h: usize, w: usize) -> Self {
        let (sx, sy) = (w as f64, h as f64);
        let short = h.min(w) as f64;
        let to_px = |t: f64| {
            let (x, y) = bezier_unchecked(shape, t);
            (x * sx, y * sy)
        };

        let mut length = 0.0;
        let mut prev = to_px(0.0);
        for k in 1..=LENGTH_SEGMENTS {
            let p = to_px(k as f64 / LENGTH_SEGMENTS as f64);
            length += ((p.0 - prev.0).powi(2) + (p.1 - prev.1).powi(2)).sqrt();
            prev = p;
        }
        let samples = MIN_SAMPLES.max((SAMPLES_PER_PIXEL * length).ceil() as usize);

        let mut points = Vec::with_capacity(samples);
        let mut radii = Vec::with_capacity(samples);
        let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        let mut r_max: f64 = 0.0;
        for k in 0..samples {
            let t = k as f64 / (samples - 1) as f64;
            let p = to_px(t);
            let r = width_at(shape, t) * short;
            x_lo = x_lo.min(p.0);
            x_hi = x_hi.max(p.0);
            y_lo = y_lo.min(p.1);
            y_hi = y_hi.max(p.1);
            r_max = r_max.max(r);
            points.push(p);
            radii.push(r);
        }
        let pad = r_max + AA_BAND / 2.0;
        Self {
            points,
            radii,
            reach: (x_lo - pad, x_hi + pad, y_lo - pad, y_hi + pad),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.points.len()
    }

    /// Coverage at pixel-frame position `(px, py)`; pixel `(i, j)` has its
    /// center at `(j + 0.5, i + 0.5)`.
    #[inline]
    pub fn coverage_at(&self, px: f64, py: f64) -> f64 {
        let (x_lo, x_hi, y_lo, y_hi) = self.reach;
        if px < x_lo || px > x_hi || py < y_lo || py > y_hi {
            return 0.0;
        }
        let mut best = f64::MAX;
        let mut best_k = 0;
        for (k, &(x, y)) in self.points.iter().enumerate() {
            let d2 = (px - x) * (px - x) + (py - y) * (py - y);
            if d2 < best {
                best = d2;
                best_k = k;
            }
        }
        let d = best.sqrt();
        ((self.radii[best_k] - d) / AA_BAND + 0.5).clamp(0.0, 1.0)
    }

    /// Coverage of pixel `(row, col)`.
    #[inline]
    pub fn coverage_pixel(&self, row: usize, col: usize) -> f64 {
        self.coverage_at(col as f64 + 0.5, row as f64 + 0.5)
    }
}

/// Anti-aliased coverage of `shape` on an `h x w` canvas.
///
/// The curve is sampled at `max(8, ceil(4 L))` parameters, `L` being its length
/// in pixels. Each pixel takes the distance `d` to the nearest sample and that
/// sample's radius `r` (in pixels, relative to the short side), and maps them to
/// `clamp(r - d + 0.5, 0, 1)`.
pub fn rasterize_silhouette(shape: &StrokeShape, h: usize, w: usize) -> Result<Silhouette> {
    if h == 0 || w == 0 {
        return Err(StrokeError::ZeroSize(h, w));
    }
    let sampler = CurveSampler::new(shape, h, w);
    let (x_lo, x_hi, y_lo, y_hi) = sampler.reach;
    let mut values = vec![0.0; h * w];
    // Only rows and columns whose centers fall inside the reach box can be covered.
    let row_lo = (y_lo - 0.5).ceil().max(0.0) as usize;
    let row_hi = ((y_hi - 0.5).floor() + 1.0).clamp(0.0, h as f64) as usize;
    let col_lo = (x_lo - 0.5).ceil().max(0.0) as usize;
    let col_hi = ((x_hi - 0.5).floor() + 1.0).clamp(0.0, w as f64) as usize;
    for i in row_lo..row_hi {
        for j in col_lo..col_hi {
            values[i * w + j] = sampler.coverage_pixel(i, j);
        }
    }
    Ok(Silhouette { height: h, width: w, values })
}
