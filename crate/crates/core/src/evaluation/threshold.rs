use crate::error::{Error, Result};
use crate::imagecore::{largest_component, morph_open_close, BinaryMask, Connectivity, GrayImage, ImageSequence};

/// Sequences shorter than this are thresholded without background subtraction.
pub const MIN_FRAMES_FOR_BACKGROUND: usize = 10;

/// Background-difference thresholds tried by [`tune_thresholds`].
const BG_THRESHOLD_GRID: [f64; 10] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0, 80.0];

/// Settings of the intensity-threshold baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdConfig {
    pub low: u8,
    pub high: u8,
    pub use_background_subtraction: bool,
    /// Minimum `|I - background|` for a pixel to count as moving.
    pub bg_threshold: f64,
    pub smooth_radius: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            low: 0,
            high: 125,
            use_background_subtraction: true,
            bg_threshold: 20.0,
            smooth_radius: 1,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.low > self.high {
            return Err(Error::InvalidArgument(format!(
                "threshold low {} exceeds high {}",
                self.low, self.high
            )));
        }
        if !(self.bg_threshold >= 0.0) {
            return Err(Error::InvalidArgument("bg_threshold must be non-negative".into()));
        }
        Ok(())
    }

    /// The temporal mean used for subtraction, or `None` when subtraction is
    /// off or the sequence is too short.
    pub fn background_for(&self, sequence: &ImageSequence) -> Option<Vec<f64>> {
        (self.use_background_subtraction && sequence.len() >= MIN_FRAMES_FOR_BACKGROUND)
            .then(|| temporal_mean(sequence))
    }
}

/// Per-pixel mean intensity over all frames, row-major.
pub fn temporal_mean(sequence: &ImageSequence) -> Vec<f64> {
    let (w, h) = sequence.dims();
    let mut sum = vec![0.0; w * h];
    for f in sequence.frames() {
        for (s, &v) in sum.iter_mut().zip(f.as_raw()) {
            *s += v as f64;
        }
    }
    let n = sequence.len().max(1) as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    sum
}

fn candidates(frame: &GrayImage, background: Option<&[f64]>, cfg: &ThresholdConfig) -> BinaryMask {
    let (w, h) = frame.dims();
    let raw = frame.as_raw();
    BinaryMask::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let v = raw[i];
        let moving = background.is_none_or(|bg| (v as f64 - bg[i]).abs() > cfg.bg_threshold);
        moving && v >= cfg.low && v <= cfg.high
    })
}

/// Candidate pixels, open/close smoothing, then the largest 8-connected region.
pub fn threshold_mask(frame: &GrayImage, background: Option<&[f64]>, cfg: &ThresholdConfig) -> BinaryMask {
    let smooth = morph_open_close(&candidates(frame, background, cfg), cfg.smooth_radius);
    largest_component(&smooth, Connectivity::Eight)
}

/// Baseline segmentation of frame `index`.
pub fn threshold_segment(sequence: &ImageSequence, cfg: &ThresholdConfig, index: usize) -> Result<BinaryMask> {
    cfg.validate()?;
    let frame = sequence.get(index).ok_or_else(|| {
        Error::InvalidArgument(format!("frame {index} is outside the {}-frame sequence", sequence.len()))
    })?;
    Ok(threshold_mask(frame, cfg.background_for(sequence).as_deref(), cfg))
}

/// Chooses `[low, high]` (and the background threshold, when subtraction
/// applies) maximizing `(TP - FP) / |G|` of the candidate pixels on frame
/// `index` against `truth`. Ties keep the smallest background threshold, then
/// the smallest `low`, then the smallest `high`.
pub fn tune_thresholds(
    sequence: &ImageSequence,
    index: usize,
    truth: &BinaryMask,
    base: &ThresholdConfig,
) -> Result<ThresholdConfig> {
    let frame = sequence.get(index).ok_or_else(|| {
        Error::InvalidArgument(format!("frame {index} is outside the {}-frame sequence", sequence.len()))
    })?;
    if frame.dims() != truth.dims() {
        return Err(Error::dims(frame.dims(), truth.dims()));
    }
    if truth.is_empty() {
        return Err(Error::EmptyMask);
    }
    let background = base.background_for(sequence);
    let grid: Vec<f64> = match background {
        Some(_) => BG_THRESHOLD_GRID.to_vec(),
        None => vec![base.bg_threshold],
    };
    let mut best: Option<(i64, ThresholdConfig)> = None;
    for bg_threshold in grid {
        // signed histogram: +1 for every worm pixel, -1 for every other pixel
        let mut gain = [0i64; 256];
        for (i, (&v, &g)) in frame.as_raw().iter().zip(truth.as_slice()).enumerate() {
            let moving = background.as_ref().is_none_or(|bg| (v as f64 - bg[i]).abs() > bg_threshold);
            if moving {
                gain[v as usize] += if g { 1 } else { -1 };
            }
        }
        for low in 0..256 {
            let mut score = 0i64;
            for (high, g) in gain.iter().enumerate().skip(low) {
                score += g;
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((
                        score,
                        ThresholdConfig {
                            low: low as u8,
                            high: high as u8,
                            bg_threshold,
                            ..base.clone()
                        },
                    ));
                }
            }
        }
    }
    Ok(best.expect("at least one interval is scored").1)
}
