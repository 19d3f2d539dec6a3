use super::{Image, ImageError, Result};

/// PSNR values are reported as `+inf` for identical images; this is the value
/// shown in human-readable output instead.
pub const PSNR_DISPLAY_CAP: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// ITU-R BT.601 luma.
#[inline]
pub fn luma(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

fn luma_plane(image: &Image) -> Vec<f64> {
    image
        .as_raw()
        .chunks_exact(3)
        .map(|p| luma([p[0], p[1], p[2]]))
        .collect()
}

/// Mean squared error over all channels.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.as_raw().len() as f64)
}

/// `10 log10(peak^2 / MSE)`; `+inf` when the images are identical.
///
/// On `[0, 1]` data with `peak = 1` this equals the usual 8-bit PSNR with
/// `peak = 255` computed on the byte values.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// PSNR with the infinite case capped at [`PSNR_DISPLAY_CAP`].
pub fn psnr_display(value: f64) -> f64 {
    value.min(PSNR_DISPLAY_CAP)
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable 'valid' Gaussian filtering of a single plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut tmp = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            let row = &plane[i * w + j..i * w + j + SSIM_WINDOW];
            tmp[i * ow + j] = row.iter().zip(win).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = (0..SSIM_WINDOW).map(|k| tmp[(i + k) * ow + j] * win[k]).sum();
        }
    }
    out
}

/// Mean SSIM of the luma planes with an 11x11 Gaussian window (sigma 1.5),
/// evaluated at every position where the window fits inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(ImageError::TooSmall(h, w, SSIM_WINDOW));
    }
    let x = luma_plane(a);
    let y = luma_plane(b);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let win = gaussian_window();
    let mu_x = filter_valid(&x, h, w, &win);
    let mu_y = filter_valid(&y, h, w, &win);
    let e_xx = filter_valid(&xx, h, w, &win);
    let e_yy = filter_valid(&yy, h, w, &win);
    let e_xy = filter_valid(&xy, h, w, &win);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|k| {
            let (mx, my) = (mu_x[k], mu_y[k]);
            let vx = e_xx[k] - mx * mx;
            let vy = e_yy[k] - my * my;
            let cov = e_xy[k] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Mean magnitude of the central-difference luma gradient. Indices are clamped
/// at the border, so edge pixels use a one-sided half difference.
pub fn edge_sharpness(image: &Image) -> Result<f64> {
    let (h, w) = image.dims();
    if h < 2 || w < 2 {
        return Err(ImageError::TooSmall(h, w, 2));
    }
    let y = luma_plane(image);
    let at = |i: usize, j: usize| y[i * w + j];
    let mut total = 0.0;
    for i in 0..h {
        for j in 0..w {
            let gx = (at(i, (j + 1).min(w - 1)) - at(i, j.saturating_sub(1))) / 2.0;
            let gy = (at((i + 1).min(h - 1), j) - at(i.saturating_sub(1), j)) / 2.0;
            total += (gx * gx + gy * gy).sqrt();
        }
    }
    Ok(total / (h * w) as f64)
}
