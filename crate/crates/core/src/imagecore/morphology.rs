//! Binary morphology with a discrete disk structuring element.
//!
//! Pixels outside the raster are ignored by both dilation and erosion, which
//! keeps the two operators adjoint on the bounded domain: opening and closing
//! are then true algebraic openings/closings and `close(open(.))` is idempotent.

use super::raster::BinaryMask;

/// Offsets `(dx, dy)` with `dx² + dy² <= radius²`.
pub fn disk_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

/// Smoothing radius tied to the annotated worm width: `max(1, round(width / 10))`.
pub fn default_radius(worm_width: f64) -> usize {
    ((worm_width / 10.0).round() as usize).max(1)
}

fn apply(mask: &BinaryMask, offsets: &[(i64, i64)], dilate: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let mut inside = offsets.iter().filter_map(|&(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                None
            } else {
                Some(mask.get(nx as usize, ny as usize))
            }
        });
        if dilate {
            inside.any(|v| v)
        } else {
            inside.all(|v| v)
        }
    })
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, &disk_offsets(radius), true)
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, &disk_offsets(radius), false)
}

pub fn open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = disk_offsets(radius);
    apply(&apply(mask, &offsets, false), &offsets, true)
}

pub fn close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = disk_offsets(radius);
    apply(&apply(mask, &offsets, true), &offsets, false)
}

/// Removes speckle and fills small holes: `close(open(mask))`.
pub fn morph_open_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let radius = radius.max(1);
    close(&open(mask, radius), radius)
}
