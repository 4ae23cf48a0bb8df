//! Pipeline driver behind the `meme` binary.
//!
//! Each stage reads its inputs from disk and writes its outputs under
//! `output_dir`, so stages can be run one at a time or chained with `all`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use meme_core::appearance::{learn_model, read_model, segment_frame, write_model};
use meme_core::config::KeyValues;
use meme_core::evaluation::{compare_methods, tune_thresholds, write_comparison_csv, MemeSettings};
use meme_core::imagecore::io::list_frames;
use meme_core::imagecore::{load_mask, load_sequence, save_mask, BinaryMask};
use meme_core::motility::{analyze, write_curvature_csv, write_envelope_csv, write_summary_csv, write_trajectory_csv};
use meme_core::skeleton::{extract_skeleton, read_skeleton_csv, write_skeleton_csv, Skeleton, SkeletonConfig};
use meme_core::synthgen::{frame_name, generate_sequence, write_dataset, SceneSpec};

pub use config::{PipelineConfig, KEYS, PATH_KEYS, SYNTH_PREFIX};

pub const SKELETON_CSV: &str = "skeleton.csv";
pub const CURVATURE_CSV: &str = "curvature.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const ENVELOPE_CSV: &str = "envelope.csv";
pub const COMPARISON_CSV: &str = "comparison.csv";

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    /// Learn the appearance model from the annotated frame.
    Learn,
    /// Segment every frame with the learned model.
    Segment,
    /// Trace a centerline in every mask.
    Skeleton,
    /// Curvature, beat frequency, wave speed and trajectory.
    Motility,
    /// Score the model and the threshold baseline against truth masks.
    Eval,
    /// Render a synthetic dataset with ground truth.
    Synth,
    /// learn, segment, skeleton and motility in order.
    All,
}

#[derive(Debug, Parser)]
#[command(name = "meme", version, about = "Nematode segmentation, skeleton tracing and motility analysis")]
pub struct Cli {
    pub stage: Stage,
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config overrides, `key=value`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Cli {
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut kv = KeyValues::parse(&self.overrides.join("\n"), "command-line override")?;
        if let Some(s) = self.seed {
            kv.set("seed", s.to_string());
        }
        PipelineConfig::load(self.config.as_deref(), &kv)
    }
}

/// Runs one stage (or the chain for [`Stage::All`]).
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    match stage {
        Stage::Learn => learn(cfg),
        Stage::Segment => segment(cfg),
        Stage::Skeleton => skeleton(cfg),
        Stage::Motility => motility(cfg),
        Stage::Eval => eval(cfg),
        Stage::Synth => synth(cfg),
        Stage::All => {
            learn(cfg)?;
            segment(cfg)?;
            skeleton(cfg)?;
            motility(cfg)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn learn(cfg: &PipelineConfig) -> Result<()> {
    let manifest = cfg.manifest()?;
    let input = manifest
        .load_input()
        .with_context(|| format!("loading annotation {}", manifest.frame.display()))?;
    let t = Instant::now();
    let model = learn_model(&input, &cfg.learn)?;
    log::info!(
        "learned model: d={} K={} grid {}x{} in {:.2?}",
        model.patch.d,
        model.k,
        cfg.learn.grid_rows,
        cfg.learn.grid_cols,
        t.elapsed()
    );
    let path = cfg.model_path();
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    write_model(&model, &path)?;
    Ok(())
}

pub fn segment(cfg: &PipelineConfig) -> Result<()> {
    let model_path = cfg.model_path();
    let model = read_model(&model_path).with_context(|| format!("reading model {}", model_path.display()))?;
    let sequence = load_sequence(cfg.sequence_dir()?)?;
    if sequence.dims() != model.dims() {
        let (mw, mh) = model.dims();
        let (sw, sh) = sequence.dims();
        bail!("dimension mismatch: model was learned on {mw}x{mh} frames but the sequence is {sw}x{sh}");
    }
    let radius = cfg.smooth_radius()?;
    let dir = cfg.masks_dir();
    create_dir(&dir)?;
    for old in list_frames(&dir)? {
        fs::remove_file(&old).with_context(|| format!("removing stale mask {}", old.display()))?;
    }
    (0..sequence.len()).into_par_iter().try_for_each(|i| -> Result<()> {
        let t = Instant::now();
        let mask = segment_frame(&model, &sequence.frames()[i], radius, cfg.keep_largest)?;
        save_mask(&mask, dir.join(frame_name("mask_", i, "png")))?;
        log::info!("segmented frame {i}: {} worm pixels in {:.2?}", mask.count(), t.elapsed());
        Ok(())
    })
}

fn load_masks(paths: &[PathBuf]) -> Result<Vec<BinaryMask>> {
    paths
        .par_iter()
        .map(|p| load_mask(p).with_context(|| format!("loading mask {}", p.display())))
        .collect()
}

pub fn skeleton(cfg: &PipelineConfig) -> Result<()> {
    let dir = cfg.masks_dir();
    let paths = list_frames(&dir).with_context(|| format!("listing masks in {}", dir.display()))?;
    if paths.is_empty() {
        bail!("no masks in {}; run `segment` first", dir.display());
    }
    let masks = load_masks(&paths)?;
    let mut sk = SkeletonConfig::new(cfg.worm_width()?);
    sk.n_points = cfg.n_points;
    let skeletons: Vec<Option<Skeleton>> = masks
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let t = Instant::now();
            match extract_skeleton(m, &sk) {
                Ok(e) => {
                    log::info!("skeleton of frame {i}: length {:.1} px in {:.2?}", e.resampled.length(), t.elapsed());
                    Some(e.resampled)
                }
                Err(e) => {
                    log::warn!("no skeleton for frame {i}: {e}");
                    None
                }
            }
        })
        .collect();
    write_skeleton_csv(cfg.output_dir.join(SKELETON_CSV), &skeletons)?;
    Ok(())
}

pub fn motility(cfg: &PipelineConfig) -> Result<()> {
    let path = cfg.output_dir.join(SKELETON_CSV);
    let skeletons = read_skeleton_csv(&path).with_context(|| format!("reading {}", path.display()))?;
    let a = analyze(&skeletons, cfg.frame_rate)?;
    let out = &cfg.output_dir;
    write_curvature_csv(out.join(CURVATURE_CSV), &a.field)?;
    write_trajectory_csv(out.join(TRAJECTORY_CSV), &a.report.trajectory)?;
    write_summary_csv(out.join(SUMMARY_CSV), &a.report)?;
    match &a.envelope {
        Some(env) => write_envelope_csv(out.join(ENVELOPE_CSV), env)?,
        None => log::warn!("no beat detected; posture envelope not written"),
    }
    log::info!(
        "f = {:.3} Hz, c = {:.3} body lengths/s, lambda = {:.3} body lengths",
        a.report.frequency,
        a.report.wave_speed,
        a.report.wavelength
    );
    Ok(())
}

/// Frame index encoded in the digits of a file stem, e.g. `mask_0007.png` -> 7.
fn frame_index(path: &Path) -> Result<usize> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let digits: String = stem
        .chars()
        .rev()
        .take_while(char::is_ascii_digit)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits
        .parse()
        .with_context(|| format!("truth mask {} has no trailing frame number", path.display()))
}

pub fn eval(cfg: &PipelineConfig) -> Result<()> {
    let model_path = cfg.model_path();
    let model = read_model(&model_path).with_context(|| format!("reading model {}", model_path.display()))?;
    let seq_dir = cfg.sequence_dir()?;
    let sequence = load_sequence(seq_dir)?;
    let truth_dir = cfg.truth_dir.as_deref().context("config is missing `truth_dir`")?;
    let paths: Vec<PathBuf> = list_frames(truth_dir)?
        .into_iter()
        .filter(|p| p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| s.starts_with("mask")))
        .collect();
    if paths.is_empty() {
        bail!("no truth masks in {}", truth_dir.display());
    }
    let masks = load_masks(&paths)?;
    let truth: Vec<(usize, BinaryMask)> = paths
        .iter()
        .map(|p| frame_index(p))
        .zip(masks)
        .map(|(i, m)| i.map(|i| (i, m)))
        .collect::<Result<_>>()?;
    let baseline = if cfg.tune_baseline {
        let (i, g) = &truth[0];
        tune_thresholds(&sequence, *i, g, &cfg.baseline)?
    } else {
        cfg.baseline.clone()
    };
    log::info!(
        "baseline: intensity [{}, {}], background subtraction {}, bg_threshold {}",
        baseline.low,
        baseline.high,
        baseline.use_background_subtraction,
        baseline.bg_threshold
    );
    let settings = MemeSettings {
        smooth_radius: cfg.smooth_radius()?,
        keep_largest: cfg.keep_largest,
    };
    let cmp = compare_methods(&sequence, &truth, &model, settings, &baseline)?;
    let name = seq_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    create_dir(&cfg.output_dir)?;
    write_comparison_csv(cfg.output_dir.join(COMPARISON_CSV), &name, &cmp)?;
    let (me, my) = cmp.meme_mean();
    let (be, by) = cmp.baseline_mean();
    log::info!("meme: error {me:.4} yield {my:.4}; threshold: error {be:.4} yield {by:.4}");
    Ok(())
}

pub fn synth(cfg: &PipelineConfig) -> Result<()> {
    let spec = SceneSpec::from_key_values(&cfg.scene)?;
    let t = Instant::now();
    let generated = generate_sequence(&spec)?;
    create_dir(&cfg.output_dir)?;
    write_dataset(&generated, &spec, &cfg.output_dir)?;
    log::info!(
        "rendered {} frames of {}x{} in {:.2?}",
        spec.n_frames,
        spec.width,
        spec.height,
        t.elapsed()
    );
    Ok(())
}
