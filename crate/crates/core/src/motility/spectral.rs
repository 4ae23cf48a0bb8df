use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::curvature::CurvatureField;
use crate::error::{Error, Result};

pub const MIN_FRAMES: usize = 16;
/// Body band used for spectral estimates.
pub const BODY_BAND: (f64, f64) = (0.2, 0.8);
/// Largest RMS phase residual (radians) accepted as a traveling wave.
pub const MAX_PHASE_RESIDUAL: f64 = 0.5;

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

fn detrended_windowed(series: &[f64], window: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().zip(window).map(|(v, w)| (v - mean) * w).collect()
}

/// Peak frequency of one series (Hz) with parabolic refinement, or `None` when
/// no bin rises above numerical noise.
fn peak_frequency(series: &[f64], frame_rate: f64, planner: &mut FftPlanner<f64>) -> Option<f64> {
    let n = series.len();
    let window = hann(n);
    let mut buf: Vec<Complex<f64>> = detrended_windowed(series, &window)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..=n / 2].iter().map(|c| c.norm()).collect();
    let scale = series.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let (k, &peak) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    if !(peak > 1e-9 * scale) || peak == 0.0 {
        return None;
    }
    let mut pos = k as f64;
    if k > 1 && k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            pos += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Some(pos * frame_rate / n as f64)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Frequency resolution `frame_rate / n_frames` of the spectra.
pub fn frequency_bin(field: &CurvatureField) -> f64 {
    field.frame_rate / field.n_frames() as f64
}

/// Dominant temporal frequency of the curvature field: the median over body
/// positions in the central band of the Hann-windowed spectral peak. 0 when the
/// field does not vary in time.
pub fn beat_frequency(field: &CurvatureField) -> Result<f64> {
    let n = field.n_frames();
    if n < MIN_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_FRAMES,
            got: n,
        });
    }
    let mut planner = FftPlanner::new();
    let peaks: Vec<f64> = field
        .band(BODY_BAND.0, BODY_BAND.1)
        .into_iter()
        .map(|j| peak_frequency(&field.column(j), field.frame_rate, &mut planner).unwrap_or(0.0))
        .collect();
    if peaks.is_empty() {
        return Err(Error::InvalidArgument("no body points in the spectral band".into()));
    }
    Ok(median(peaks))
}

/// Direction in which the bending wave travels along the body.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum WaveDirection {
    HeadToTail,
    TailToHead,
}

impl WaveDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveDirection::HeadToTail => "head_to_tail",
            WaveDirection::TailToHead => "tail_to_head",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WaveSpeed {
    /// Body lengths per second.
    pub speed: f64,
    pub direction: WaveDirection,
    /// Slope of the unwrapped phase against `s / L` (radians per body length).
    pub phase_slope: f64,
    /// RMS residual of the linear phase fit (radians).
    pub residual: f64,
}

/// Phase of the windowed Fourier component at `freq` for each band column.
fn phases(field: &CurvatureField, cols: &[usize], freq: f64) -> Vec<f64> {
    let window = hann(field.n_frames());
    let mut out: Vec<f64> = Vec::with_capacity(cols.len());
    for &j in cols {
        let series = detrended_windowed(&field.column(j), &window);
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in series.iter().enumerate() {
            let a = -2.0 * PI * freq * field.times[t];
            re += v * a.cos();
            im += v * a.sin();
        }
        let raw = im.atan2(re);
        let value = match out.last() {
            None => raw,
            Some(&prev) => {
                let mut d: f64 = raw - prev;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                prev + d
            }
        };
        out.push(value);
    }
    out
}

/// Wave speed from the gradient of the temporal phase at `freq` along the
/// body: `c = 2 pi f / |d theta / d(s/L)|`. A falling phase means the wave
/// moves from head to tail.
pub fn wave_speed(field: &CurvatureField, freq: f64) -> Result<WaveSpeed> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency {freq} must be positive")));
    }
    if field.n_frames() < MIN_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_FRAMES,
            got: field.n_frames(),
        });
    }
    let cols = field.band(BODY_BAND.0, BODY_BAND.1);
    if cols.len() < 3 {
        return Err(Error::InvalidArgument("fewer than 3 body points in the spectral band".into()));
    }
    let theta = phases(field, &cols, freq);
    let x: Vec<f64> = cols.iter().map(|&j| field.body_coord[j]).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, theta.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&theta).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let residual = (x
        .iter()
        .zip(&theta)
        .map(|(a, b)| (b - (my + slope * (a - mx))).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(residual <= MAX_PHASE_RESIDUAL) || slope == 0.0 {
        return Err(Error::NonTravelingWave { residual });
    }
    Ok(WaveSpeed {
        speed: 2.0 * PI * freq / slope.abs(),
        direction: if slope < 0.0 {
            WaveDirection::HeadToTail
        } else {
            WaveDirection::TailToHead
        },
        phase_slope: slope,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(n_frames: usize, n_points: usize, rate: f64, f: impl Fn(f64, f64) -> f64) -> CurvatureField {
        let body: Vec<f64> = (0..n_points).map(|j| j as f64 / (n_points - 1) as f64).collect();
        let times: Vec<f64> = (0..n_frames).map(|t| t as f64 / rate).collect();
        CurvatureField {
            values: times.iter().map(|&t| body.iter().map(|&s| f(s, t)).collect()).collect(),
            arclen: vec![body.iter().map(|s| s * 100.0).collect(); n_frames],
            body_coord: body,
            times,
            frame_rate: rate,
        }
    }

    #[test]
    fn pure_tone_at_two_hertz() {
        let fld = field(200, 49, 50.0, |_, t| (2.0 * PI * 2.0 * t).sin());
        let f = beat_frequency(&fld).unwrap();
        assert!((f - 2.0).abs() <= 0.25, "{f}");
        assert_eq!(frequency_bin(&fld), 0.25);
    }

    #[test]
    fn constant_field_has_zero_frequency() {
        let fld = field(64, 21, 30.0, |s, _| 0.01 * s);
        assert_eq!(beat_frequency(&fld).unwrap(), 0.0);
    }

    #[test]
    fn short_sequences_rejected() {
        let fld = field(15, 21, 30.0, |_, t| t.sin());
        assert!(matches!(beat_frequency(&fld), Err(Error::TooFewFrames { needed: 16, got: 15 })));
    }

    #[test]
    fn traveling_wave_speed() {
        let fld = field(200, 49, 50.0, |s, t| (2.0 * PI * (2.0 * s - 2.0 * t)).sin());
        let f = beat_frequency(&fld).unwrap();
        let w = wave_speed(&fld, 2.0).unwrap();
        assert!((w.speed - 1.0).abs() < 1e-6, "{}", w.speed);
        assert_eq!(w.direction, WaveDirection::HeadToTail);
        assert!((f - 2.0).abs() <= 0.25);
        let back = field(200, 49, 50.0, |s, t| (2.0 * PI * (2.0 * s + 2.0 * t)).sin());
        assert_eq!(wave_speed(&back, 2.0).unwrap().direction, WaveDirection::TailToHead);
    }

    #[test]
    fn standing_wave_rejected() {
        let fld = field(200, 49, 50.0, |s, t| (2.0 * PI * s).sin() * (2.0 * PI * 2.0 * t).cos());
        assert!(matches!(wave_speed(&fld, 2.0), Err(Error::NonTravelingWave { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn frequency_is_scale_invariant(scale in 1e-3f64..1e3, f0 in 0.5f64..4.0, phase in 0.0f64..6.0) {
            let a = field(90, 25, 30.0, |s, t| (2.0 * PI * (s - f0 * t) + phase).sin() + 0.1 * s);
            let b = field(90, 25, 30.0, |s, t| scale * ((2.0 * PI * (s - f0 * t) + phase).sin() + 0.1 * s));
            let (fa, fb) = (beat_frequency(&a).unwrap(), beat_frequency(&b).unwrap());
            prop_assert!((fa - fb).abs() < 1e-9);
        }
    }
}
