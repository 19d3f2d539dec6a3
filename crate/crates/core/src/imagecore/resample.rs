use super::{Image, ImageError, Result};

const CATMULL_ROM_A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5`.
#[inline]
pub fn catmull_rom(x: f64) -> f64 {
    let a = CATMULL_ROM_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// One output sample: first source index and its weights.
struct Taps {
    start: isize,
    weights: Vec<f64>,
}

fn taps_for_axis(in_len: usize, out_len: usize) -> Vec<Taps> {
    let scale = out_len as f64 / in_len as f64;
    // Widen the kernel when shrinking so every source pixel contributes.
    let stretch = if scale < 1.0 { 1.0 / scale } else { 1.0 };
    let support = 2.0 * stretch;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) / scale - 0.5;
            let start = (center - support).floor() as isize;
            let end = (center + support).ceil() as isize;
            let mut weights: Vec<f64> = (start..=end)
                .map(|s| catmull_rom((s as f64 - center) / stretch))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Taps { start, weights }
        })
        .collect()
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Separable Catmull-Rom resampling with edge clamping. The kernel is stretched
/// by the reduction ratio when downsampling. Output is clamped to `[0, 1]`.
pub fn bicubic_resample(image: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(ImageError::ZeroSize(out_h, out_w));
    }
    let (h, w) = image.dims();
    if (h, w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let src = image.as_raw();

    let col_taps = taps_for_axis(w, out_w);
    let mut horiz = vec![0.0; h * out_w * 3];
    for i in 0..h {
        for (o, taps) in col_taps.iter().enumerate() {
            let mut acc = [0.0; 3];
            for (k, &wt) in taps.weights.iter().enumerate() {
                let j = clamp_index(taps.start + k as isize, w);
                let p = (i * w + j) * 3;
                acc[0] += wt * src[p];
                acc[1] += wt * src[p + 1];
                acc[2] += wt * src[p + 2];
            }
            horiz[(i * out_w + o) * 3..(i * out_w + o) * 3 + 3].copy_from_slice(&acc);
        }
    }

    let row_taps = taps_for_axis(h, out_h);
    let mut out = vec![0.0; out_h * out_w * 3];
    for (o, taps) in row_taps.iter().enumerate() {
        for j in 0..out_w {
            let mut acc = [0.0; 3];
            for (k, &wt) in taps.weights.iter().enumerate() {
                let i = clamp_index(taps.start + k as isize, h);
                let p = (i * out_w + j) * 3;
                acc[0] += wt * horiz[p];
                acc[1] += wt * horiz[p + 1];
                acc[2] += wt * horiz[p + 2];
            }
            out[(o * out_w + j) * 3..(o * out_w + j) * 3 + 3].copy_from_slice(&acc);
        }
    }
    Image::from_raw(out_h, out_w, out)
}

/// Area-average resampling of a `channels`-interleaved buffer. Each output pixel
/// is the overlap-weighted mean of the source pixels it covers.
pub(crate) fn area_resample(
    src: &[f64],
    h: usize,
    w: usize,
    channels: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f64> {
    let row_spans = area_spans(h, out_h);
    let col_spans = area_spans(w, out_w);
    let mut out = vec![0.0; out_h * out_w * channels];
    for (oi, rs) in row_spans.iter().enumerate() {
        for (oj, cs) in col_spans.iter().enumerate() {
            let dst = &mut out[(oi * out_w + oj) * channels..(oi * out_w + oj + 1) * channels];
            let mut total = 0.0;
            for &(i, wi) in rs {
                for &(j, wj) in cs {
                    let wt = wi * wj;
                    total += wt;
                    let p = (i * w + j) * channels;
                    for c in 0..channels {
                        dst[c] += wt * src[p + c];
                    }
                }
            }
            for v in dst.iter_mut() {
                *v /= total;
            }
        }
    }
    out
}

fn area_spans(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let lo = o as f64 * ratio;
            let hi = (o + 1) as f64 * ratio;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(in_len);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap))
                })
                .collect()
        })
        .collect()
}

/// Box-filter (area average) resampling to `out_h x out_w`.
pub fn box_downsample(image: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(ImageError::ZeroSize(out_h, out_w));
    }
    let (h, w) = image.dims();
    if (h, w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let data = area_resample(image.as_raw(), h, w, 3, out_h, out_w);
    Image::from_raw(out_h, out_w, data)
}
