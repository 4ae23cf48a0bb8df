//! Motility metrics from per-frame centerlines: curvature field, posture
//! envelope, beat frequency, wave speed, wavelength and endpoint tracks.

mod curvature;
mod posture;
mod spectral;
mod trajectory;

use std::path::Path;

pub use curvature::{curvature_field, curvature_profile, tangent_angles, CurvatureField};
pub use posture::{align_skeleton, posture_envelope, PostureEnvelope};
pub use spectral::{
    beat_frequency, frequency_bin, wave_speed, WaveDirection, WaveSpeed, BODY_BAND, MAX_PHASE_RESIDUAL,
    MIN_FRAMES,
};
pub use trajectory::{orient_by_travel, orient_skeletons, track_trajectory, TrajectoryRow};

use crate::csv::write_table;
use crate::error::{Error, Result};
use crate::skeleton::Skeleton;

/// Summary metrics of one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct MotilityReport {
    /// Hz.
    pub frequency: f64,
    /// Body lengths per second; NaN when no wave was found.
    pub wave_speed: f64,
    /// Body lengths.
    pub wavelength: f64,
    pub direction: Option<WaveDirection>,
    pub trajectory: Vec<TrajectoryRow>,
}

impl MotilityReport {
    /// Builds a report with `wavelength = wave_speed / frequency`.
    pub fn new(frequency: f64, wave_speed: f64, direction: Option<WaveDirection>, trajectory: Vec<TrajectoryRow>) -> Self {
        let wavelength = if frequency > 0.0 { wave_speed / frequency } else { f64::NAN };
        Self {
            frequency,
            wave_speed,
            wavelength,
            direction,
            trajectory,
        }
    }
}

/// Everything the motility stage derives from a sequence of skeletons.
#[derive(Clone, Debug)]
pub struct MotilityAnalysis {
    pub oriented: Vec<Option<Skeleton>>,
    pub field: CurvatureField,
    pub report: MotilityReport,
    pub envelope: Option<PostureEnvelope>,
}

/// Net displacement (pixels) below which the head is not inferred from motion.
pub const MIN_TRAVEL: f64 = 2.0;

/// Orients the skeletons (consistently across frames, head leading the net
/// motion), builds the curvature field over frames that have one
/// and estimates `f`, `c` and `lambda`. Frames without a skeleton are dropped
/// from the field; the spectral estimates assume they are rare.
pub fn analyze(skeletons: &[Option<Skeleton>], frame_rate: f64) -> Result<MotilityAnalysis> {
    let oriented = orient_by_travel(&orient_skeletons(skeletons), MIN_TRAVEL);
    let present: Vec<Skeleton> = oriented.iter().flatten().cloned().collect();
    if present.is_empty() {
        return Err(Error::TooFewFrames { needed: MIN_FRAMES, got: 0 });
    }
    let field = curvature_field(&present, frame_rate)?;
    let frequency = beat_frequency(&field)?;
    let (speed, direction) = if frequency > 0.0 {
        match wave_speed(&field, frequency) {
            Ok(w) => (w.speed, Some(w.direction)),
            Err(Error::NonTravelingWave { residual }) => {
                log::warn!("no traveling wave (phase residual {residual:.3} rad)");
                (f64::NAN, None)
            }
            Err(e) => return Err(e),
        }
    } else {
        (f64::NAN, None)
    };
    let envelope = if frequency > 0.0 {
        let period = (frame_rate / frequency).round().max(1.0) as usize;
        posture_envelope(&present, period.min(present.len()), frame_rate).ok()
    } else {
        None
    };
    let report = MotilityReport::new(frequency, speed, direction, track_trajectory(&oriented));
    Ok(MotilityAnalysis {
        oriented,
        field,
        report,
        envelope,
    })
}

pub fn write_curvature_csv(path: impl AsRef<Path>, field: &CurvatureField) -> Result<()> {
    let rows = field.values.iter().enumerate().flat_map(|(t, row)| {
        row.iter()
            .zip(&field.body_coord)
            .map(move |(k, s)| vec![t.to_string(), s.to_string(), k.to_string()])
    });
    write_table(path, &["frame", "s_over_l", "kappa"], rows)
}

pub fn write_trajectory_csv(path: impl AsRef<Path>, rows: &[TrajectoryRow]) -> Result<()> {
    write_table(
        path,
        &["frame", "head_x", "head_y", "tail_x", "tail_y"],
        rows.iter().map(|r| {
            vec![
                r.frame.to_string(),
                r.head.x.to_string(),
                r.head.y.to_string(),
                r.tail.x.to_string(),
                r.tail.y.to_string(),
            ]
        }),
    )
}

pub fn write_envelope_csv(path: impl AsRef<Path>, env: &PostureEnvelope) -> Result<()> {
    let rows = env.aligned.iter().enumerate().flat_map(|(f, pts)| {
        pts.iter()
            .enumerate()
            .map(move |(i, p)| vec![f.to_string(), i.to_string(), p.x.to_string(), p.y.to_string()])
    });
    write_table(path, &["frame", "point_index", "x", "y"], rows)
}

pub fn write_summary_csv(path: impl AsRef<Path>, report: &MotilityReport) -> Result<()> {
    let direction = report.direction.map_or("none", WaveDirection::as_str);
    write_table(
        path,
        &["frequency_hz", "wave_speed_bl_per_s", "wavelength_bl", "direction"],
        [vec![
            report.frequency.to_string(),
            report.wave_speed.to_string(),
            report.wavelength.to_string(),
            direction.to_string(),
        ]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::Point;

    #[test]
    fn wavelength_is_speed_over_frequency() {
        let r = MotilityReport::new(1.5, 0.9, Some(WaveDirection::HeadToTail), Vec::new());
        assert_eq!(r.wavelength, 0.9 / 1.5);
        assert!(MotilityReport::new(0.0, f64::NAN, None, Vec::new()).wavelength.is_nan());
    }

    #[test]
    fn analyze_recovers_a_synthetic_traveling_wave() {
        // tangent angle psi(s, t) = 0.6 sin(2 pi (s / 100 - 1.5 t)), 100 px long body
        let rate = 30.0;
        let skels: Vec<Option<Skeleton>> = (0..120)
            .map(|t| {
                let time = t as f64 / rate;
                let mut p = Point::new(0.0, 0.0);
                let mut pts = vec![p];
                for i in 1..49 {
                    let s = i as f64 * 100.0 / 48.0;
                    let psi = 0.6 * (2.0 * std::f64::consts::PI * (s / 100.0 - 1.5 * time)).sin();
                    p = Point::new(p.x + psi.cos() * 100.0 / 48.0, p.y + psi.sin() * 100.0 / 48.0);
                    pts.push(p);
                }
                Some(Skeleton::from_points(pts))
            })
            .collect();
        let a = analyze(&skels, rate).unwrap();
        assert!((a.report.frequency - 1.5).abs() <= rate / 120.0);
        // one wavelength per body: c = f body lengths per second
        assert!((a.report.wave_speed - 1.5).abs() < 0.15, "{}", a.report.wave_speed);
        assert_eq!(a.report.direction, Some(WaveDirection::HeadToTail));
        assert_eq!(a.report.wavelength, a.report.wave_speed / a.report.frequency);
        assert_eq!(a.report.trajectory.len(), 120);
        assert!(a.envelope.is_some());
    }

    #[test]
    fn csv_headers() {
        let dir = tempfile::tempdir().unwrap();
        let r = MotilityReport::new(2.0, 1.0, Some(WaveDirection::HeadToTail), Vec::new());
        let p = dir.path().join("summary.csv");
        write_summary_csv(&p, &r).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "frequency_hz,wave_speed_bl_per_s,wavelength_bl,direction\n2,1,0.5,head_to_tail\n"
        );
    }
}
