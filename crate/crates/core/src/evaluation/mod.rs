//! Mask metrics, the intensity-threshold baseline and the two-method comparison.

mod threshold;

pub use threshold::{
    temporal_mean, threshold_mask, threshold_segment, tune_thresholds, ThresholdConfig, MIN_FRAMES_FOR_BACKGROUND,
};

use std::path::Path;

use rayon::prelude::*;

use crate::appearance::{segment_frame, AppearanceModel};
use crate::csv::write_table;
use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageSequence};

/// Scores of one segmented frame.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub frame_index: usize,
    pub surface_error: f64,
    pub nematode_yield: f64,
}

/// Fraction of all pixels on which `g` and `s` disagree.
pub fn surface_error(g: &BinaryMask, s: &BinaryMask) -> Result<f64> {
    g.ensure_same_dims(s)?;
    let wrong = g.as_slice().iter().zip(s.as_slice()).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / g.as_slice().len() as f64)
}

/// Fraction of the true worm pixels that `s` labels as worm. Pixels outside
/// the worm do not enter.
pub fn nematode_yield(g: &BinaryMask, s: &BinaryMask) -> Result<f64> {
    g.ensure_same_dims(s)?;
    let worm = g.count();
    if worm == 0 {
        return Err(Error::EmptyMask);
    }
    let hit = g.as_slice().iter().zip(s.as_slice()).filter(|(&a, &b)| a && b).count();
    Ok(hit as f64 / worm as f64)
}

pub fn evaluate(frame_index: usize, g: &BinaryMask, s: &BinaryMask) -> Result<EvalResult> {
    Ok(EvalResult {
        frame_index,
        surface_error: surface_error(g, s)?,
        nematode_yield: nematode_yield(g, s)?,
    })
}

/// Per-frame scores of the appearance-model method and the threshold baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameComparison {
    pub frame: usize,
    pub meme: EvalResult,
    pub baseline: EvalResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// One entry per truth frame, in the order given.
    pub frames: Vec<FrameComparison>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl Comparison {
    /// Mean `(surface_error, nematode_yield)` of the appearance-model method.
    pub fn meme_mean(&self) -> (f64, f64) {
        (
            mean(self.frames.iter().map(|f| f.meme.surface_error)),
            mean(self.frames.iter().map(|f| f.meme.nematode_yield)),
        )
    }

    pub fn baseline_mean(&self) -> (f64, f64) {
        (
            mean(self.frames.iter().map(|f| f.baseline.surface_error)),
            mean(self.frames.iter().map(|f| f.baseline.nematode_yield)),
        )
    }
}

/// Scores precomputed outputs; `meme[i]` and `baseline[i]` belong to `truth[i]`.
pub fn compare_outputs(truth: &[(usize, BinaryMask)], meme: &[BinaryMask], baseline: &[BinaryMask]) -> Result<Comparison> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no ground-truth frames".into()));
    }
    if meme.len() != truth.len() || baseline.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} truth frames but {} and {} segmentations",
            truth.len(),
            meme.len(),
            baseline.len()
        )));
    }
    let frames = truth
        .iter()
        .zip(meme.iter().zip(baseline))
        .map(|((frame, g), (m, b))| {
            Ok(FrameComparison {
                frame: *frame,
                meme: evaluate(*frame, g, m)?,
                baseline: evaluate(*frame, g, b)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison { frames })
}

/// Settings for the appearance-model side of [`compare_methods`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MemeSettings {
    pub smooth_radius: usize,
    pub keep_largest: bool,
}

/// Segments every truth frame with both methods and scores them.
pub fn compare_methods(
    sequence: &ImageSequence,
    truth: &[(usize, BinaryMask)],
    meme: &AppearanceModel,
    settings: MemeSettings,
    baseline: &ThresholdConfig,
) -> Result<Comparison> {
    if let Some((i, _)) = truth.iter().find(|(i, _)| *i >= sequence.len()) {
        return Err(Error::InvalidArgument(format!(
            "truth frame {i} is outside the {}-frame sequence",
            sequence.len()
        )));
    }
    baseline.validate()?;
    let background = baseline.background_for(sequence);
    let (meme_masks, base_masks): (Vec<_>, Vec<_>) = truth
        .par_iter()
        .map(|(i, _)| {
            let frame = &sequence.frames()[*i];
            let m = segment_frame(meme, frame, settings.smooth_radius, settings.keep_largest)?;
            let b = threshold_mask(frame, background.as_deref(), baseline);
            Ok((m, b))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    compare_outputs(truth, &meme_masks, &base_masks)
}

/// Writes `sequence,frame,method,surface_error,nematode_yield` rows, two per
/// truth frame, followed by one `mean` row per method.
pub fn write_comparison_csv(path: impl AsRef<Path>, sequence_name: &str, cmp: &Comparison) -> Result<()> {
    let row = |frame: String, method: &str, e: f64, y: f64| {
        vec![sequence_name.to_string(), frame, method.to_string(), e.to_string(), y.to_string()]
    };
    let mut rows = Vec::with_capacity(2 * cmp.frames.len() + 2);
    for f in &cmp.frames {
        rows.push(row(f.frame.to_string(), "meme", f.meme.surface_error, f.meme.nematode_yield));
        rows.push(row(f.frame.to_string(), "threshold", f.baseline.surface_error, f.baseline.nematode_yield));
    }
    let (me, my) = cmp.meme_mean();
    let (be, by) = cmp.baseline_mean();
    rows.push(row("mean".into(), "meme", me, my));
    rows.push(row("mean".into(), "threshold", be, by));
    write_table(
        path,
        &["sequence", "frame", "method", "surface_error", "nematode_yield"],
        rows,
    )
}
