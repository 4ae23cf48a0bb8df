use crate::skeleton::{Point, Skeleton};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub frame: usize,
    pub head: Point,
    pub tail: Point,
}

/// Flips skeletons so point 0 stays the same physical end from frame to frame:
/// each frame takes the orientation whose endpoints lie closest to the last
/// oriented frame. The first skeleton's orientation is kept.
pub fn orient_skeletons(skeletons: &[Option<Skeleton>]) -> Vec<Option<Skeleton>> {
    let mut prev: Option<(Point, Point)> = None;
    skeletons
        .iter()
        .map(|s| {
            let s = s.as_ref()?;
            let (h, t) = (s.head()?, s.tail()?);
            let oriented = match prev {
                Some((ph, pt)) if ph.dist(t) + pt.dist(h) < ph.dist(h) + pt.dist(t) => s.reversed(),
                _ => s.clone(),
            };
            prev = Some((oriented.head()?, oriented.tail()?));
            Some(oriented)
        })
        .collect()
}

/// Reverses every skeleton when point 0 trails the net motion: the summed
/// frame-to-frame centroid displacement is compared with the tail-to-head axis.
/// Sequences that move less than `min_travel` pixels are left as they are.
pub fn orient_by_travel(oriented: &[Option<Skeleton>], min_travel: f64) -> Vec<Option<Skeleton>> {
    let centroid = |s: &Skeleton| {
        let n = s.len() as f64;
        let (x, y) = s.points().iter().fold((0.0, 0.0), |a, p| (a.0 + p.x, a.1 + p.y));
        Point::new(x / n, y / n)
    };
    let present: Vec<&Skeleton> = oriented.iter().flatten().collect();
    let (mut along, mut travel) = (0.0, Point::new(0.0, 0.0));
    for w in present.windows(2) {
        let (a, b) = (centroid(w[0]), centroid(w[1]));
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        travel = Point::new(travel.x + dx, travel.y + dy);
        if let (Some(h), Some(t)) = (w[0].head(), w[0].tail()) {
            along += dx * (h.x - t.x) + dy * (h.y - t.y);
        }
    }
    if travel.x.hypot(travel.y) < min_travel || along >= 0.0 {
        return oriented.to_vec();
    }
    oriented.iter().map(|s| s.as_ref().map(Skeleton::reversed)).collect()
}

/// Head and tail positions of every frame that has a skeleton, after orientation.
pub fn track_trajectory(skeletons: &[Option<Skeleton>]) -> Vec<TrajectoryRow> {
    orient_skeletons(skeletons)
        .into_iter()
        .enumerate()
        .filter_map(|(frame, s)| {
            let s = s?;
            Some(TrajectoryRow {
                frame,
                head: s.head()?,
                tail: s.tail()?,
            })
        })
        .collect()
}
