use super::resample::bicubic_resample;
use super::{round_dim, Image, ImageError, Result};

/// Disjoint square tiles of a reflection-padded image, in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid {
    patch_size: usize,
    rows: usize,
    cols: usize,
    patches: Vec<Image>,
    pad_top: usize,
    pad_left: usize,
    pad_bottom: usize,
    pad_right: usize,
}

impl PatchGrid {
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn patches(&self) -> &[Image] {
        &self.patches
    }

    /// `(top, left, bottom, right)` padding in source pixels.
    pub fn padding(&self) -> (usize, usize, usize, usize) {
        (self.pad_top, self.pad_left, self.pad_bottom, self.pad_right)
    }

    /// Dimensions of the image the grid was cut from.
    pub fn source_dims(&self) -> (usize, usize) {
        (
            self.rows * self.patch_size - self.pad_top - self.pad_bottom,
            self.cols * self.patch_size - self.pad_left - self.pad_right,
        )
    }

    /// Same layout with the tiles replaced, e.g. by their upscaled versions.
    ///
    /// # Panics
    /// If the number of tiles changes.
    pub fn with_patches(&self, patches: Vec<Image>) -> PatchGrid {
        assert_eq!(patches.len(), self.patches.len(), "patch count must not change");
        PatchGrid {
            patches,
            ..self.clone()
        }
    }
}

/// Index into `0..len` after mirroring about the edge pixels (no edge repeat).
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Splits the padding needed to reach a multiple of `patch`. An odd pixel goes
/// to the bottom/right side.
fn split_pad(len: usize, patch: usize) -> (usize, usize) {
    let total = (patch - len % patch) % patch;
    let before = total / 2;
    (before, total - before)
}

/// Reflection-pads `image` to multiples of `patch_size` and tiles it.
///
/// # Panics
/// If `patch_size` is zero.
pub fn split_patches(image: &Image, patch_size: usize) -> PatchGrid {
    assert!(patch_size >= 1, "patch_size must be at least 1");
    let (h, w) = image.dims();
    let (pad_top, pad_bottom) = split_pad(h, patch_size);
    let (pad_left, pad_right) = split_pad(w, patch_size);
    let rows = (h + pad_top + pad_bottom) / patch_size;
    let cols = (w + pad_left + pad_right) / patch_size;

    let mut patches = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let patch = Image::from_fn(patch_size, patch_size, |i, j| {
                let si = reflect((r * patch_size + i) as isize - pad_top as isize, h);
                let sj = reflect((c * patch_size + j) as isize - pad_left as isize, w);
                image.get(si, sj)
            });
            patches.push(patch);
        }
    }
    PatchGrid {
        patch_size,
        rows,
        cols,
        patches,
        pad_top,
        pad_left,
        pad_bottom,
        pad_right,
    }
}

/// Places the tiles edge to edge and crops the (scaled) padding away. The
/// result is `round(h * scale) x round(w * scale)` for source dims `h x w`.
pub fn stitch_patches(grid: &PatchGrid, scale: f64) -> Result<Image> {
    let (h, w) = grid.source_dims();
    stitch_patches_to(grid, scale, round_dim(h as f64 * scale), round_dim(w as f64 * scale))
}

/// Like [`stitch_patches`] with explicit output dims.
///
/// Tiles must be `round(patch_size * scale)` square. When that rounding makes
/// the tile scale differ from `scale`, the cropped mosaic is bicubic-resampled
/// to the requested dims.
pub fn stitch_patches_to(grid: &PatchGrid, scale: f64, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(ImageError::ZeroSize(out_h, out_w));
    }
    let tile = round_dim(grid.patch_size as f64 * scale);
    for (index, p) in grid.patches.iter().enumerate() {
        if p.dims() != (tile, tile) {
            return Err(ImageError::InconsistentPatch {
                index,
                h: p.height(),
                w: p.width(),
                expected: tile,
            });
        }
    }
    if tile == 0 {
        return Err(ImageError::ZeroSize(0, 0));
    }

    let full_h = grid.rows * tile;
    let full_w = grid.cols * tile;
    let mut mosaic = vec![0.0; full_h * full_w * 3];
    for (idx, p) in grid.patches.iter().enumerate() {
        let (r, c) = (idx / grid.cols, idx % grid.cols);
        for i in 0..tile {
            let dst = ((r * tile + i) * full_w + c * tile) * 3;
            let src = i * tile * 3;
            mosaic[dst..dst + tile * 3].copy_from_slice(&p.as_raw()[src..src + tile * 3]);
        }
    }
    let mosaic = Image::from_raw(full_h, full_w, mosaic)?;

    let tile_scale = tile as f64 / grid.patch_size as f64;
    let (src_h, src_w) = grid.source_dims();
    let top = round_dim(grid.pad_top as f64 * tile_scale).min(full_h - 1);
    let left = round_dim(grid.pad_left as f64 * tile_scale).min(full_w - 1);
    let crop_h = round_dim(src_h as f64 * tile_scale).clamp(1, full_h - top);
    let crop_w = round_dim(src_w as f64 * tile_scale).clamp(1, full_w - left);
    let cropped = mosaic.crop(top, left, crop_h, crop_w);
    if cropped.dims() == (out_h, out_w) {
        Ok(cropped)
    } else {
        bicubic_resample(&cropped, out_h, out_w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |i, j| {
            [
                ((i * 7 + j * 3) % 11) as f64 / 10.0,
                ((i * j) % 5) as f64 / 4.0,
                (i + j) as f64 / (h + w) as f64,
            ]
        })
    }

    #[test]
    fn exact_multiple_has_no_padding() {
        let grid = split_patches(&textured(32, 48), 16);
        assert_eq!((grid.rows(), grid.cols()), (2, 3));
        assert_eq!(grid.padding(), (0, 0, 0, 0));
        assert_eq!(grid.patches().len(), 6);
    }

    #[test]
    fn twenty_pixels_pad_twelve() {
        let img = textured(20, 20);
        let grid = split_patches(&img, 16);
        assert_eq!((grid.rows(), grid.cols()), (2, 2));
        let (t, l, b, r) = grid.padding();
        assert_eq!((t + b, l + r), (12, 12));
        assert_eq!((t, b), (6, 6));
        assert_eq!(grid.source_dims(), (20, 20));
        // Reflection without edge repeat: padded row 5 mirrors source row 1.
        assert_eq!(grid.patches()[0].get(5, 6), img.get(1, 0));
        assert_eq!(stitch_patches(&grid, 1.0).unwrap(), img);
    }

    #[test]
    fn odd_padding_goes_bottom_right() {
        let grid = split_patches(&textured(15, 13), 16);
        assert_eq!(grid.padding(), (0, 1, 1, 2));
    }

    #[test]
    fn single_patch_is_identity() {
        let img = textured(16, 16);
        let grid = split_patches(&img, 16);
        assert_eq!(grid.patches()[0], img);
    }

    #[test]
    fn reflect_handles_tiny_and_long_pads() {
        assert_eq!(reflect(-3, 1), 0);
        assert_eq!(reflect(-1, 3), 1);
        assert_eq!(reflect(3, 3), 1);
        assert_eq!(reflect(5, 3), 1);
        assert_eq!(reflect(6, 3), 2);
        let grid = split_patches(&textured(1, 2), 16);
        assert_eq!(stitch_patches(&grid, 1.0).unwrap(), textured(1, 2));
    }

    #[test]
    fn stitch_scales_dims() {
        let grid = split_patches(&textured(32, 48), 16);
        let up: Vec<Image> = (0..6).map(|k| Image::filled(64, 64, [k as f64 / 6.0; 3])).collect();
        let out = stitch_patches(&grid.with_patches(up), 4.0).unwrap();
        assert_eq!(out.dims(), (128, 192));
        assert_eq!(out.get(0, 64), [1.0 / 6.0; 3]);
        assert_eq!(out.get(127, 191), [5.0 / 6.0; 3]);
    }

    #[test]
    fn inconsistent_patch_is_rejected() {
        let grid = split_patches(&textured(32, 48), 16);
        let mut up: Vec<Image> = (0..6).map(|_| Image::black(64, 64)).collect();
        up[3] = Image::black(63, 64);
        let err = stitch_patches(&grid.with_patches(up), 4.0).unwrap_err();
        assert!(matches!(err, ImageError::InconsistentPatch { index: 3, h: 63, .. }));
    }

    #[test]
    fn fractional_tile_scale_hits_requested_dims() {
        let grid = split_patches(&textured(17, 17), 16);
        let tile = round_dim(16.0 * 1.02);
        let up: Vec<Image> = grid.patches().iter().map(|_| Image::filled(tile, tile, [0.4; 3])).collect();
        let out = stitch_patches(&grid.with_patches(up), 1.02).unwrap();
        assert_eq!(out.dims(), (17, 17));
        let out = stitch_patches_to(&split_patches(&textured(17, 17), 16), 1.0, 20, 21).unwrap();
        assert_eq!(out.dims(), (20, 21));
    }

    proptest! {
        #[test]
        fn split_stitch_round_trip(h in 1usize..40, w in 1usize..40, p in 1usize..20) {
            let img = textured(h, w);
            let grid = split_patches(&img, p);
            prop_assert_eq!(grid.rows() * grid.cols(), grid.patches().len());
            prop_assert_eq!(grid.source_dims(), (h, w));
            prop_assert_eq!(stitch_patches(&grid, 1.0).unwrap(), img);
        }
    }
}
