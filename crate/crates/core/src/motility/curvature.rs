use crate::error::{Error, Result};
use crate::skeleton::Skeleton;

/// Signed curvature `kappa(s, t)` on a frames x points grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureField {
    /// One row per frame, one column per body point.
    pub values: Vec<Vec<f64>>,
    /// Normalized body coordinate `s / L` of each column, 0 at the head.
    pub body_coord: Vec<f64>,
    /// Timestamp of each row in seconds.
    pub times: Vec<f64>,
    pub frame_rate: f64,
    /// Arc-length position of every point, per frame.
    pub arclen: Vec<Vec<f64>>,
}

impl CurvatureField {
    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn n_points(&self) -> usize {
        self.body_coord.len()
    }

    /// The time series `kappa(s_j, .)`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Columns whose body coordinate lies in `[lo, hi]`.
    pub fn band(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n_points())
            .filter(|&j| self.body_coord[j] >= lo - 1e-12 && self.body_coord[j] <= hi + 1e-12)
            .collect()
    }

    /// Integration weights (half the distance to each neighbour) for one frame.
    pub fn arc_weights(&self, frame: usize) -> Vec<f64> {
        dual_weights(&self.arclen[frame])
    }
}

fn dual_weights(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { s[0] } else { s[i - 1] };
            let hi = if i + 1 == n { s[n - 1] } else { s[i + 1] };
            (hi - lo) / 2.0
        })
        .collect()
}

/// Tangent angles along a polyline, unwrapped so consecutive values differ by
/// less than pi. Interior tangents use the chord through both neighbours.
pub fn tangent_angles(points: &[crate::skeleton::Point]) -> Vec<f64> {
    let n = points.len();
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let a = points[i.saturating_sub(1)];
        let b = points[(i + 1).min(n - 1)];
        let raw = (b.y - a.y).atan2(b.x - a.x);
        let value = match phi.last() {
            None => raw,
            Some(&prev) => prev + wrap(raw - prev),
        };
        phi.push(value);
    }
    phi
}

fn wrap(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// `d phi / d s` by central differences on the (possibly uneven) arc-length
/// grid, one-sided at the ends.
pub fn curvature_profile(skel: &Skeleton) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = skel.len();
    if n < 3 {
        return Err(Error::DegenerateSkeleton(format!("{n} point(s), need at least 3")));
    }
    let chord = Skeleton::from_points(skel.points().to_vec());
    let s = chord.arclen();
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateSkeleton("repeated consecutive points".into()));
    }
    let phi = tangent_angles(skel.points());
    let kappa = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (phi[b] - phi[a]) / (s[b] - s[a])
        })
        .collect();
    Ok((kappa, s.to_vec()))
}

/// Builds `kappa(s, t)` from per-frame skeletons that share a point count.
pub fn curvature_field(skeletons: &[Skeleton], frame_rate: f64) -> Result<CurvatureField> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("frame rate {frame_rate} must be positive")));
    }
    let Some(first) = skeletons.first() else {
        return Err(Error::TooFewFrames { needed: 1, got: 0 });
    };
    let n = first.len();
    let mut values = Vec::with_capacity(skeletons.len());
    let mut arclen = Vec::with_capacity(skeletons.len());
    for s in skeletons {
        if s.len() != n {
            return Err(Error::InvalidArgument(format!(
                "skeletons must share a point count ({} vs {n})",
                s.len()
            )));
        }
        let (k, a) = curvature_profile(s)?;
        values.push(k);
        arclen.push(a);
    }
    Ok(CurvatureField {
        values,
        body_coord: (0..n).map(|j| j as f64 / (n - 1) as f64).collect(),
        times: (0..skeletons.len()).map(|t| t as f64 / frame_rate).collect(),
        frame_rate,
        arclen,
    })
}
