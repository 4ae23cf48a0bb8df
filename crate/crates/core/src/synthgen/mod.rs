//! Procedural worm sequences with exact ground truth.
//!
//! The body is a sinusoid `y = A sin(2 pi (x_b / lambda - f t))` over the body
//! coordinate `x_b`, head at `x_b = 0`, swimming towards +x at a constant speed.
//! The body's x extent is chosen per frame so that its arc length equals the
//! requested worm length. The worm is the band of half width `W / 2` around that
//! centerline (rounded ends), rasterized by 4 x 4 supersampling.

mod scene;

pub use scene::{Background, SceneSpec, WormSpec};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{save_gray, save_mask, BinaryMask, GrayImage, ImageSequence};
use crate::motility::{MotilityReport, TrajectoryRow, WaveDirection};
use crate::seed::derive_seed;
use crate::skeleton::{write_skeleton_csv, Point, Skeleton};

/// Spacing of the dense centerline samples along `x_b` (pixels).
const DENSE_STEP: f64 = 0.25;
const SUPERSAMPLE: usize = 4;

/// A rendered sequence and its ground truth.
#[derive(Clone, Debug)]
pub struct GeneratedSequence {
    pub sequence: ImageSequence,
    pub masks: Vec<BinaryMask>,
    /// Head-first dense centerlines.
    pub centerlines: Vec<Skeleton>,
    pub truth: MotilityReport,
}

/// Arc length (pixels) of one full wavelength of the sinusoid.
pub fn wavelength_arc(worm: &WormSpec) -> f64 {
    let n = 20_000;
    let k = 2.0 * std::f64::consts::PI / worm.wavelength;
    let h = worm.wavelength / n as f64;
    let g = |x: f64| (1.0 + (worm.amplitude * k * (k * x).cos()).powi(2)).sqrt();
    // composite Simpson
    let mut sum = g(0.0) + g(worm.wavelength);
    for i in 1..n {
        sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// True motility parameters; wave speed and wavelength in body lengths.
pub fn truth_report(spec: &SceneSpec, trajectory: Vec<TrajectoryRow>) -> MotilityReport {
    let lambda_body = wavelength_arc(&spec.worm) / spec.worm.length;
    MotilityReport::new(
        spec.worm.frequency,
        lambda_body * spec.worm.frequency,
        Some(WaveDirection::HeadToTail),
        trajectory,
    )
}

/// Dense head-first centerline at time `t`.
pub fn centerline(spec: &SceneSpec, t: f64) -> Vec<Point> {
    let w = &spec.worm;
    let k = 2.0 * std::f64::consts::PI / w.wavelength;
    let phase = 2.0 * std::f64::consts::PI * w.frequency * t;
    let y = |xb: f64| w.amplitude * (k * xb - phase).sin();
    let head_x = spec.head_x() + w.speed * t;
    let mut pts = vec![Point::new(head_x, spec.center_y() + y(0.0))];
    let (mut xb, mut arc) = (0.0, 0.0);
    while arc < w.length {
        let next = xb + DENSE_STEP;
        let seg = DENSE_STEP.hypot(y(next) - y(xb));
        if arc + seg >= w.length {
            // partial final step on the straight chord
            let frac = (w.length - arc) / seg;
            let end = xb + frac * DENSE_STEP;
            pts.push(Point::new(head_x - end, spec.center_y() + y(xb) + frac * (y(next) - y(xb))));
            break;
        }
        xb = next;
        arc += seg;
        pts.push(Point::new(head_x - xb, spec.center_y() + y(xb)));
    }
    pts
}

fn seg_dist2(p: (f64, f64), a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let (wx, wy) = (p.0 - a.x, p.1 - a.y);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    dx * dx + dy * dy
}

/// Rasterizes the band of half width `radius` around `line` (x strictly
/// decreasing along the line). A pixel belongs to the band when at least half
/// of its 4 x 4 subsamples lie within `radius` of the polyline.
pub fn rasterize_band(line: &[Point], radius: f64, width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    let head_x = line[0].x;
    let step = if line.len() > 1 { line[0].x - line[1].x } else { 1.0 };
    let r2 = radius * radius;
    let x_min = line.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - radius - 1.0;
    let x_max = head_x + radius + 1.0;
    let last = line.len() - 1;
    let index_near = |x: f64| -> usize { (((head_x - x) / step).floor().max(0.0) as usize).min(last) };
    for px in (x_min.floor().max(0.0) as usize)..=(x_max.ceil().min(width as f64 - 1.0) as usize) {
        let xf = px as f64;
        // segment range whose x extent can reach this column
        let i0 = index_near(xf + 0.5 + radius).saturating_sub(1);
        let i1 = (index_near(xf - 0.5 - radius) + 1).min(last);
        if i1 <= i0 && line.len() > 1 {
            continue;
        }
        let ys = line[i0..=i1].iter().map(|p| p.y);
        let y_lo = ys.clone().fold(f64::INFINITY, f64::min) - radius - 1.0;
        let y_hi = ys.fold(f64::NEG_INFINITY, f64::max) + radius + 1.0;
        for py in (y_lo.floor().max(0.0) as usize)..=(y_hi.ceil().min(height as f64 - 1.0) as usize) {
            let mut inside = 0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let q = (
                        xf - 0.5 + (sx as f64 + 0.5) / SUPERSAMPLE as f64,
                        py as f64 - 0.5 + (sy as f64 + 0.5) / SUPERSAMPLE as f64,
                    );
                    let near = if line.len() == 1 {
                        (q.0 - line[0].x).powi(2) + (q.1 - line[0].y).powi(2) <= r2
                    } else {
                        (i0..i1).any(|i| seg_dist2(q, line[i], line[i + 1]) <= r2)
                    };
                    inside += usize::from(near);
                }
            }
            if 2 * inside >= SUPERSAMPLE * SUPERSAMPLE {
                mask.set(px, py, true);
            }
        }
    }
    mask
}

fn background_value(spec: &SceneSpec, x: usize, y: usize) -> f64 {
    match spec.background {
        Background::Uniform { level } => level,
        Background::Gradient { lo, hi } => {
            lo + (hi - lo) * x as f64 / (spec.width.max(2) - 1) as f64
        }
        Background::Pillars {
            spacing,
            radius,
            level,
            base,
        } => {
            let row_h = spacing * 3f64.sqrt() / 2.0;
            let (xf, yf) = (x as f64, y as f64);
            let r = (yf / row_h).round();
            let near_pillar = [r - 1.0, r, r + 1.0].iter().any(|&row| {
                let offset = if (row as i64).rem_euclid(2) == 1 { spacing / 2.0 } else { 0.0 };
                let cy = row * row_h;
                let cx = ((xf - offset) / spacing).round() * spacing + offset;
                [cx - spacing, cx, cx + spacing]
                    .iter()
                    .any(|&c| (xf - c).powi(2) + (yf - cy).powi(2) <= radius * radius)
            });
            if near_pillar {
                level
            } else {
                base
            }
        }
    }
}

/// The noise-free background image.
pub fn render_background(spec: &SceneSpec) -> GrayImage {
    GrayImage::from_fn(spec.width, spec.height, |x, y| {
        background_value(spec, x, y).round().clamp(0.0, 255.0) as u8
    })
}

fn render_frame(spec: &SceneSpec, mask: &BinaryMask, frame: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, frame as u64));
    let worm = Normal::new(spec.worm.intensity_mean, spec.worm.intensity_sigma.max(0.0))
        .expect("sigma validated");
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("sigma validated");
    GrayImage::from_fn(spec.width, spec.height, |x, y| {
        let base = if mask.get(x, y) {
            worm.sample(&mut rng)
        } else {
            background_value(spec, x, y)
        };
        (base + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
    })
}

/// Renders every frame with its truth mask and centerline.
pub fn generate_sequence(spec: &SceneSpec) -> Result<GeneratedSequence> {
    spec.validate()?;
    let frames: Vec<(GrayImage, BinaryMask, Skeleton)> = (0..spec.n_frames)
        .into_par_iter()
        .map(|f| {
            let t = f as f64 / spec.frame_rate;
            let line = centerline(spec, t);
            let mask = rasterize_band(&line, spec.worm.width / 2.0, spec.width, spec.height);
            let image = render_frame(spec, &mask, f);
            (image, mask, Skeleton::from_points(line))
        })
        .collect();
    let mut images = Vec::with_capacity(frames.len());
    let mut masks = Vec::with_capacity(frames.len());
    let mut centerlines = Vec::with_capacity(frames.len());
    for (i, m, c) in frames {
        images.push(i);
        masks.push(m);
        centerlines.push(c);
    }
    let trajectory = centerlines
        .iter()
        .enumerate()
        .map(|(frame, c)| TrajectoryRow {
            frame,
            head: c.head().expect("nonempty centerline"),
            tail: c.tail().expect("nonempty centerline"),
        })
        .collect();
    Ok(GeneratedSequence {
        sequence: ImageSequence::new(images, Some(spec.frame_rate))?,
        masks,
        centerlines,
        truth: truth_report(spec, trajectory),
    })
}

/// Zero-padded frame file name, so lexicographic order is frame order.
pub fn frame_name(prefix: &str, frame: usize, ext: &str) -> String {
    format!("{prefix}{frame:04}.{ext}")
}

/// Writes `frames/`, `truth/` (masks, centerlines, motility) and an
/// `annotation.txt` manifest for frame 0 under `dir`.
pub fn write_dataset(generated: &GeneratedSequence, spec: &SceneSpec, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let frames = dir.join("frames");
    let truth = dir.join("truth");
    for d in [&frames, &truth] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    generated
        .sequence
        .frames()
        .par_iter()
        .zip(generated.masks.par_iter())
        .enumerate()
        .try_for_each(|(i, (img, mask))| -> Result<()> {
            save_gray(img, frames.join(frame_name("frame_", i, "png")))?;
            save_mask(mask, truth.join(frame_name("mask_", i, "png")))
        })?;
    let centerlines: Vec<Option<Skeleton>> = generated.centerlines.iter().cloned().map(Some).collect();
    write_skeleton_csv(truth.join("centerline.csv"), &centerlines)?;
    crate::motility::write_summary_csv(truth.join("motility.csv"), &generated.truth)?;
    crate::motility::write_trajectory_csv(truth.join("trajectory.csv"), &generated.truth.trajectory)?;
    let manifest = crate::appearance::Manifest {
        frame: Path::new("frames").join(frame_name("frame_", 0, "png")),
        mask: Path::new("truth").join(frame_name("mask_", 0, "png")),
        width_px: spec.worm.width.round() as usize,
    };
    let path = dir.join("annotation.txt");
    std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("scene.conf");
    std::fs::write(&path, spec.to_key_values().to_text()).map_err(|e| Error::io(&path, e))
}
