//! Centerline extraction: distance transform, endpoint detection and the MAP
//! walk along the distance ridge, plus smoothing and arc-length resampling.

mod distance;
mod endpoint;
mod trace;

use std::path::Path;

pub use distance::{boundary_pixels, chamfer_transform, DistanceField};
pub use endpoint::{corner_window, find_endpoint, find_endpoints, k_cosine_angles, trace_contour};
pub use trace::{trace_skeleton, trace_skeleton_with, DirectionPrior, TraceOptions, DEFAULT_PRIOR_FLOOR, DIRECTIONS};

use crate::csv::{read_table, write_table};
use crate::error::{Error, Result};
use crate::imagecore::BinaryMask;

pub const DEFAULT_POINTS: usize = 49;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ordered centerline points with cumulative arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    points: Vec<Point>,
    arclen: Vec<f64>,
}

impl Skeleton {
    /// Arc length accumulates chord lengths.
    pub fn from_points(points: Vec<Point>) -> Self {
        let mut arclen = Vec::with_capacity(points.len());
        let mut s = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                s += p.dist(points[i - 1]);
            }
            arclen.push(s);
        }
        Self { points, arclen }
    }

    pub fn with_arclen(points: Vec<Point>, arclen: Vec<f64>) -> Result<Self> {
        if points.len() != arclen.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} arc lengths",
                points.len(),
                arclen.len()
            )));
        }
        Ok(Self { points, arclen })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn arclen(&self) -> &[f64] {
        &self.arclen
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.arclen.last().copied().unwrap_or(0.0)
    }

    pub fn reversed(&self) -> Skeleton {
        let total = self.length();
        Skeleton {
            points: self.points.iter().rev().copied().collect(),
            arclen: self.arclen.iter().rev().map(|s| total - s).collect(),
        }
    }

    pub fn head(&self) -> Option<Point> {
        self.points.first().copied()
    }

    pub fn tail(&self) -> Option<Point> {
        self.points.last().copied()
    }
}

/// `n_points` positions equally spaced in arc length along the polyline. The
/// arc length stored with each output point is its position along the input.
pub fn resample_skeleton(skel: &Skeleton, n_points: usize) -> Result<Skeleton> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("cannot resample to {n_points} points")));
    }
    if skel.len() < 2 {
        return Err(Error::DegenerateSkeleton(format!("{} point(s)", skel.len())));
    }
    let chord = Skeleton::from_points(skel.points.clone());
    let total = chord.length();
    if !(total > 0.0) {
        return Err(Error::DegenerateSkeleton("all points coincide".into()));
    }
    let s = chord.arclen();
    let mut seg = 0;
    let mut points = Vec::with_capacity(n_points);
    let mut arclen = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let target = total * j as f64 / (n_points - 1) as f64;
        if j + 1 == n_points {
            points.push(*skel.points.last().expect("len >= 2"));
            arclen.push(total);
            break;
        }
        while seg + 2 < s.len() && s[seg + 1] < target {
            seg += 1;
        }
        let (a, b) = (skel.points[seg], skel.points[seg + 1]);
        let span = s[seg + 1] - s[seg];
        let t = if span > 0.0 { ((target - s[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        points.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        arclen.push(target);
    }
    Ok(Skeleton { points, arclen })
}

/// Cuts `head` pixels of arc length from the start and `tail` from the end,
/// interpolating the new endpoints.
pub fn trim_skeleton(skel: &Skeleton, head: f64, tail: f64) -> Result<Skeleton> {
    let chord = Skeleton::from_points(skel.points.clone());
    let (s, total) = (chord.arclen(), chord.length());
    let (lo, hi) = (head.max(0.0), total - tail.max(0.0));
    if !(hi > lo) {
        return Err(Error::DegenerateSkeleton(format!(
            "length {total:.2} does not exceed the end trim {:.2}",
            head + tail
        )));
    }
    let at = |target: f64| {
        let i = s.partition_point(|&v| v < target).clamp(1, s.len() - 1);
        let (a, b) = (skel.points[i - 1], skel.points[i]);
        let span = s[i] - s[i - 1];
        let t = if span > 0.0 { ((target - s[i - 1]) / span).clamp(0.0, 1.0) } else { 0.0 };
        Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };
    let mut points = vec![at(lo)];
    points.extend(
        skel.points
            .iter()
            .zip(s)
            .filter(|(_, &v)| v > lo && v < hi)
            .map(|(p, _)| *p),
    );
    points.push(at(hi));
    Ok(Skeleton::from_points(points))
}

/// Centered moving average over `2 * half_window + 1` points; the window
/// shrinks towards the ends so both endpoints stay fixed.
pub fn smooth_skeleton(skel: &Skeleton, half_window: usize) -> Skeleton {
    let n = skel.len();
    let pts = &skel.points;
    let smoothed = (0..n)
        .map(|i| {
            let r = half_window.min(i).min(n - 1 - i);
            let (mut sx, mut sy) = (0.0, 0.0);
            for p in &pts[i - r..=i + r] {
                sx += p.x;
                sy += p.y;
            }
            let k = (2 * r + 1) as f64;
            Point::new(sx / k, sy / k)
        })
        .collect();
    Skeleton::from_points(smoothed)
}

/// Settings for [`extract_skeleton`].
#[derive(Clone, Debug)]
pub struct SkeletonConfig {
    pub worm_width: usize,
    pub trace: TraceOptions,
    /// Half window of the moving average applied before resampling; 0 disables it.
    pub smooth_half_window: usize,
    /// Arc length removed at each end after smoothing. The traced path runs to
    /// the boundary, half a body width beyond the end of the centerline.
    pub end_trim: f64,
    pub n_points: usize,
}

impl SkeletonConfig {
    pub fn new(worm_width: usize) -> Self {
        Self {
            worm_width,
            trace: TraceOptions {
                heading_window: (worm_width / 2).max(2),
                ..TraceOptions::default()
            },
            smooth_half_window: (worm_width / 2).max(1),
            end_trim: worm_width as f64 / 2.0,
            n_points: DEFAULT_POINTS,
        }
    }
}

/// Raw traced centerline and its smoothed, resampled version.
#[derive(Clone, Debug)]
pub struct ExtractedSkeleton {
    pub raw: Skeleton,
    pub resampled: Skeleton,
    pub l0: (usize, usize),
}

/// Full per-frame chain: distance field, endpoint, MAP walk, smoothing, end trim and resampling.
pub fn extract_skeleton(mask: &BinaryMask, config: &SkeletonConfig) -> Result<ExtractedSkeleton> {
    let field = chamfer_transform(mask);
    let l0 = find_endpoint(mask, config.worm_width)?;
    let lead = path_to_ridge(&field, mask, l0);
    let start = *lead.last().expect("path contains l0");
    let traced = trace_skeleton_with(&field, mask, start, &config.trace)?;
    let raw = if lead.len() == 1 {
        traced
    } else {
        let mut pts: Vec<Point> = lead[..lead.len() - 1]
            .iter()
            .map(|&(x, y)| Point::new(x as f64, y as f64))
            .collect();
        pts.extend_from_slice(traced.points());
        Skeleton::from_points(pts)
    };
    let smooth = if config.smooth_half_window > 0 {
        smooth_skeleton(&raw, config.smooth_half_window)
    } else {
        raw.clone()
    };
    let trimmed = if config.end_trim > 0.0 {
        trim_skeleton(&smooth, config.end_trim, config.end_trim)?
    } else {
        smooth
    };
    let resampled = resample_skeleton(&trimmed, config.n_points)?;
    Ok(ExtractedSkeleton { raw, resampled, l0 })
}

/// Shortest 8-connected path inside the mask from `l0` to the nearest pixel
/// with a positive-distance neighbour (just `[l0]` when `l0` already has one).
/// Thin tips of a rasterized body can leave the endpoint surrounded by
/// boundary pixels only.
fn path_to_ridge(field: &DistanceField, mask: &BinaryMask, l0: (usize, usize)) -> Vec<(usize, usize)> {
    let (w, h) = mask.dims();
    let ready = |x: usize, y: usize| {
        DIRECTIONS
            .iter()
            .any(|&(dx, dy)| field.get_signed(x as i64 + dx, y as i64 + dy) > 0.0)
    };
    let mut parent = vec![usize::MAX; w * h];
    let mut queue = std::collections::VecDeque::from([l0]);
    parent[l0.1 * w + l0.0] = l0.1 * w + l0.0;
    while let Some((x, y)) = queue.pop_front() {
        if ready(x, y) {
            let mut path = vec![(x, y)];
            let mut i = y * w + x;
            while parent[i] != i {
                i = parent[i];
                path.push((i % w, i / w));
            }
            path.reverse();
            return path;
        }
        for &(dx, dy) in &DIRECTIONS {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if mask.get_signed(nx, ny) {
                let j = ny as usize * w + nx as usize;
                if parent[j] == usize::MAX {
                    parent[j] = y * w + x;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
    }
    vec![l0]
}

/// Heuristic for coiled or self-touching bodies.
pub fn looks_coiled(skel: &Skeleton, expected_length: f64) -> bool {
    skel.length() < 0.5 * expected_length
}

/// Writes `frame,point_index,x,y,arclen` rows; frames without a skeleton are skipped.
pub fn write_skeleton_csv(path: impl AsRef<Path>, skeletons: &[Option<Skeleton>]) -> Result<()> {
    let rows = skeletons.iter().enumerate().flat_map(|(f, s)| {
        s.iter().flat_map(move |s| {
            s.points().iter().zip(s.arclen()).enumerate().map(move |(i, (p, a))| {
                vec![f.to_string(), i.to_string(), p.x.to_string(), p.y.to_string(), a.to_string()]
            })
        })
    });
    write_table(path, &["frame", "point_index", "x", "y", "arclen"], rows)
}

/// Reads a skeleton CSV back into per-frame skeletons (indexed by frame number).
pub fn read_skeleton_csv(path: impl AsRef<Path>) -> Result<Vec<Option<Skeleton>>> {
    let t = read_table(path)?;
    let frames: Vec<usize> = t.parse_column(t.column("frame")?)?;
    let index: Vec<usize> = t.parse_column(t.column("point_index")?)?;
    let xs: Vec<f64> = t.parse_column(t.column("x")?)?;
    let ys: Vec<f64> = t.parse_column(t.column("y")?)?;
    let ss: Vec<f64> = t.parse_column(t.column("arclen")?)?;
    let n_frames = frames.iter().copied().max().map_or(0, |m| m + 1);
    let mut parts: Vec<Vec<(usize, Point, f64)>> = vec![Vec::new(); n_frames];
    for i in 0..frames.len() {
        parts[frames[i]].push((index[i], Point::new(xs[i], ys[i]), ss[i]));
    }
    parts
        .into_iter()
        .map(|mut p| {
            if p.is_empty() {
                return Ok(None);
            }
            p.sort_by_key(|e| e.0);
            let (pts, arc) = p.into_iter().map(|(_, pt, s)| (pt, s)).unzip();
            Skeleton::with_arclen(pts, arc).map(Some)
        })
        .collect()
}
