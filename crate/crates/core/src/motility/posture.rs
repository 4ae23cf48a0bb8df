use crate::error::{Error, Result};
use crate::skeleton::{Point, Skeleton};

/// Skeletons over one beat period, each in its own body-centred principal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PostureEnvelope {
    pub aligned: Vec<Vec<Point>>,
    /// Seconds.
    pub period: f64,
}

impl PostureEnvelope {
    /// Largest lateral excursion `max |y|` over the envelope.
    pub fn max_lateral(&self) -> f64 {
        self.aligned
            .iter()
            .flatten()
            .map(|p| p.y.abs())
            .fold(0.0, f64::max)
    }
}

/// Centroid at the origin, first principal axis along +x, head at `x >= 0`.
pub fn align_skeleton(skel: &Skeleton) -> Result<Vec<Point>> {
    let pts = skel.points();
    if pts.is_empty() {
        return Err(Error::DegenerateSkeleton("no points".into()));
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx + syy <= 1e-12 * n {
        return Err(Error::DegenerateSkeleton("zero covariance".into()));
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (angle.cos(), angle.sin());
    let rotate = |p: &Point| {
        let (dx, dy) = (p.x - cx, p.y - cy);
        Point::new(c * dx + s * dy, -s * dx + c * dy)
    };
    let mut out: Vec<Point> = pts.iter().map(rotate).collect();
    if out[0].x < 0.0 {
        out.iter_mut().for_each(|p| *p = Point::new(-p.x, -p.y));
    }
    Ok(out)
}

/// Aligns the first `period_frames` skeletons.
pub fn posture_envelope(skeletons: &[Skeleton], period_frames: usize, frame_rate: f64) -> Result<PostureEnvelope> {
    if period_frames == 0 || skeletons.len() < period_frames {
        return Err(Error::TooFewFrames {
            needed: period_frames.max(1),
            got: skeletons.len(),
        });
    }
    if !(frame_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("frame rate {frame_rate} must be positive")));
    }
    let aligned = skeletons[..period_frames]
        .iter()
        .map(align_skeleton)
        .collect::<Result<_>>()?;
    Ok(PostureEnvelope {
        aligned,
        period: period_frames as f64 / frame_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn transform(skel: &Skeleton, angle: f64, tx: f64, ty: f64) -> Skeleton {
        let (c, s) = (angle.cos(), angle.sin());
        Skeleton::from_points(
            skel.points()
                .iter()
                .map(|p| Point::new(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty))
                .collect(),
        )
    }

    fn wavy() -> Skeleton {
        Skeleton::from_points((0..49).map(|i| {
            let x = i as f64 * 5.0;
            Point::new(x, 12.0 * (x / 40.0).sin() + 0.01 * x * x / 10.0)
        }).collect())
    }

    fn close(a: &[Point], b: &[Point]) -> bool {
        a.iter().zip(b).all(|(p, q)| p.dist(*q) < 1e-6)
    }

    #[test]
    fn straight_copies_align_identically() {
        let base = Skeleton::from_points((0..20).map(|i| Point::new(i as f64, 0.0)).collect());
        let ref_aligned = align_skeleton(&base).unwrap();
        for (a, tx, ty) in [(0.3, 10.0, -4.0), (2.0, -50.0, 3.0), (-1.2, 0.0, 99.0)] {
            assert!(close(&align_skeleton(&transform(&base, a, tx, ty)).unwrap(), &ref_aligned));
        }
        assert!(ref_aligned[0].x >= 0.0);
    }

    #[test]
    fn quarter_turn_is_invisible() {
        let w = wavy();
        let rotated = transform(&w, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        assert!(close(&align_skeleton(&w).unwrap(), &align_skeleton(&rotated).unwrap()));
    }

    #[test]
    fn centroid_at_origin_and_axis_horizontal() {
        let a = align_skeleton(&transform(&wavy(), 0.7, 5.0, 5.0)).unwrap();
        let n = a.len() as f64;
        assert!(a.iter().map(|p| p.x).sum::<f64>().abs() / n < 1e-6);
        assert!(a.iter().map(|p| p.y).sum::<f64>().abs() / n < 1e-6);
        let sxy: f64 = a.iter().map(|p| p.x * p.y).sum();
        assert!(sxy.abs() < 1e-6);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let dot = Skeleton::from_points(vec![Point::new(1.0, 1.0); 5]);
        assert!(matches!(align_skeleton(&dot), Err(Error::DegenerateSkeleton(_))));
        assert!(posture_envelope(&[wavy()], 2, 30.0).is_err());
        let env = posture_envelope(&[wavy(), wavy(), wavy()], 2, 30.0).unwrap();
        assert_eq!(env.aligned.len(), 2);
        assert!((env.period - 2.0 / 30.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rigid_motion_invariance(angle in -3.1f64..3.1, tx in -500.0f64..500.0, ty in -500.0f64..500.0) {
            let w = wavy();
            let moved = transform(&w, angle, tx, ty);
            prop_assert!(close(&align_skeleton(&w).unwrap(), &align_skeleton(&moved).unwrap()));
        }
    }
}
