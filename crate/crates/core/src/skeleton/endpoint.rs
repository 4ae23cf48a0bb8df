use crate::error::{Error, Result};
use crate::imagecore::BinaryMask;

/// Clockwise neighbour order in image coordinates (y grows downwards), starting east.
const RING: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Outer contour of the region containing the first worm pixel in row-major
/// order, by Moore-neighbour tracing. Pixels on thin parts appear more than once.
pub fn trace_contour(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let Some(start) = mask.pixels().first().copied() else {
        return Vec::new();
    };
    let step = |p: (usize, usize), dir: usize| -> Option<(usize, usize)> {
        let (dx, dy) = RING[dir];
        let (x, y) = (p.0 as i64 + dx, p.1 as i64 + dy);
        mask.get_signed(x, y).then_some((x as usize, y as usize))
    };
    // Search around `p` clockwise, beginning just after the backtrack neighbour.
    let next = |p: (usize, usize), arrived: usize| -> Option<((usize, usize), usize)> {
        (0..8).map(|i| (arrived + 5 + i) % 8).find_map(|dir| step(p, dir).map(|q| (q, dir)))
    };

    let mut contour = vec![start];
    let Some((second, first_dir)) = next(start, 0) else {
        return contour;
    };
    let (mut cur, mut dir) = (second, first_dir);
    let limit = 4 * mask.count() + 8;
    while contour.len() < limit {
        let (n, d) = next(cur, dir).expect("a contour pixel has at least one neighbour");
        if cur == start && n == second {
            break;
        }
        contour.push(cur);
        cur = n;
        dir = d;
    }
    contour
}

/// Corner measure window used for a given worm width.
pub fn corner_window(worm_width: usize) -> usize {
    (worm_width / 2).max(3)
}

/// Interior angle (radians) at every contour position between the chords to the
/// points `k` steps before and after. Coincident chord ends count as flat (`pi`).
pub fn k_cosine_angles(contour: &[(usize, usize)], k: usize) -> Vec<f64> {
    let n = contour.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let k = k.min((n - 1) / 2).max(1);
    (0..n)
        .map(|i| {
            let p = contour[i];
            let a = contour[(i + n - k) % n];
            let b = contour[(i + k) % n];
            let (ax, ay) = (a.0 as f64 - p.0 as f64, a.1 as f64 - p.1 as f64);
            let (bx, by) = (b.0 as f64 - p.0 as f64, b.1 as f64 - p.1 as f64);
            let (na, nb) = ((ax * ax + ay * ay).sqrt(), (bx * bx + by * by).sqrt());
            if na == 0.0 || nb == 0.0 {
                return std::f64::consts::PI;
            }
            ((ax * bx + ay * by) / (na * nb)).clamp(-1.0, 1.0).acos()
        })
        .collect()
}

/// The boundary pixel with the sharpest contour angle: the starting point `l_0`.
/// Equal angles resolve to the smallest `(y, x)`.
pub fn find_endpoint(mask: &BinaryMask, worm_width: usize) -> Result<(usize, usize)> {
    let contour = trace_contour(mask);
    if contour.is_empty() {
        return Err(Error::EmptyMask);
    }
    let angles = k_cosine_angles(&contour, corner_window(worm_width));
    let best = contour
        .iter()
        .zip(&angles)
        .min_by(|(p, a), (q, b)| a.total_cmp(b).then((p.1, p.0).cmp(&(q.1, q.0))))
        .map(|(p, _)| *p)
        .expect("nonempty contour");
    Ok(best)
}

/// Both contour ends: the sharpest corner and the sharpest corner at least
/// `min_separation` pixels away from it.
pub fn find_endpoints(mask: &BinaryMask, worm_width: usize, min_separation: f64) -> Result<[(usize, usize); 2]> {
    let first = find_endpoint(mask, worm_width)?;
    let contour = trace_contour(mask);
    let angles = k_cosine_angles(&contour, corner_window(worm_width));
    let far = |p: &(usize, usize)| {
        ((p.0 as f64 - first.0 as f64).powi(2) + (p.1 as f64 - first.1 as f64).powi(2)).sqrt() >= min_separation
    };
    let second = contour
        .iter()
        .zip(&angles)
        .filter(|(p, _)| far(p))
        .min_by(|(p, a), (q, b)| a.total_cmp(b).then((p.1, p.0).cmp(&(q.1, q.0))))
        .map(|(p, _)| *p)
        .unwrap_or(first);
    Ok([first, second])
}
