use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

/// Default intercept of the patch-size model.
pub const DEFAULT_ALPHA0: f64 = 1.0;
/// Default slope of the patch-size model.
pub const DEFAULT_ALPHA1: f64 = 100.0;

/// Side length of the square patches used as features.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PatchConfig {
    pub d: usize,
    pub alpha0: f64,
    pub alpha1: f64,
}

impl PatchConfig {
    /// Derives `d` from the annotated worm width and the frame size.
    pub fn from_width(worm_width: usize, width: usize, height: usize, alpha0: f64, alpha1: f64) -> Self {
        Self {
            d: compute_patch_size(worm_width, height, width, alpha0, alpha1),
            alpha0,
            alpha1,
        }
    }

    /// A fixed patch side (mostly for tests); `alpha0 = d`, `alpha1 = 0`.
    pub fn fixed(d: usize) -> Self {
        Self {
            d,
            alpha0: d as f64,
            alpha1: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub(crate) fn validate(&self, worm_width: usize) -> Result<()> {
        if self.d == 0 || self.d.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "patch side must be a positive odd number, got {}",
                self.d
            )));
        }
        if self.d > 2 * worm_width + 1 {
            return Err(Error::InvalidArgument(format!(
                "patch side {} exceeds 2 * worm width + 1 = {}",
                self.d,
                2 * worm_width + 1
            )));
        }
        Ok(())
    }
}

/// `d = alpha1 * W / max(n, m) + alpha0`, rounded to the nearest odd integer
/// and clamped to `[1, 2W + 1]`.
pub fn compute_patch_size(worm_width: usize, n: usize, m: usize, alpha0: f64, alpha1: f64) -> usize {
    let longest = n.max(m).max(1) as f64;
    let raw = alpha1 * worm_width as f64 / longest + alpha0;
    let half = ((raw - 1.0) / 2.0).round();
    let d = if half.is_finite() && half > 0.0 {
        2 * half as usize + 1
    } else {
        1
    };
    d.clamp(1, 2 * worm_width + 1)
}

/// Writes the `d x d` window centred on `(u, v)` (column, row) into `out`,
/// row-major, replicating edge pixels outside the image.
#[inline]
pub(crate) fn fill_patch(image: &GrayImage, u: usize, v: usize, d: usize, out: &mut [f64]) {
    let r = (d / 2) as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let raw = image.as_raw();
    let (u, v) = (u as i64, v as i64);
    let mut k = 0;
    if u >= r && v >= r && u + r < w && v + r < h {
        for y in (v - r)..=(v + r) {
            let row = (y * w) as usize;
            for x in (u - r)..=(u + r) {
                out[k] = f64::from(raw[row + x as usize]);
                k += 1;
            }
        }
        return;
    }
    for y in (v - r)..=(v + r) {
        let yc = y.clamp(0, h - 1);
        for x in (u - r)..=(u + r) {
            let xc = x.clamp(0, w - 1);
            out[k] = f64::from(raw[(yc * w + xc) as usize]);
            k += 1;
        }
    }
}

/// The feature vector `f(u, v; I, d)`: the vectorized `d x d` patch around
/// column `u`, row `v`. With `d = 1` it is the pixel intensity itself.
pub fn extract_patch(image: &GrayImage, u: usize, v: usize, d: usize) -> Result<Vec<f64>> {
    if u >= image.width() || v >= image.height() {
        return Err(Error::OutOfBounds {
            x: u,
            y: v,
            width: image.width(),
            height: image.height(),
        });
    }
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "patch side must be a positive odd number, got {d}"
        )));
    }
    let mut out = vec![0.0; d * d];
    fill_patch(image, u, v, d, &mut out);
    Ok(out)
}
