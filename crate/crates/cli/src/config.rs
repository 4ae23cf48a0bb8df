use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use meme_core::appearance::{read_manifest, LearnConfig, Manifest};
use meme_core::config::KeyValues;
use meme_core::evaluation::ThresholdConfig;
use meme_core::skeleton::DEFAULT_POINTS;

/// Keys holding paths. Values from a config file are resolved against the
/// file's directory; values given on the command line against the working
/// directory.
pub const PATH_KEYS: [&str; 5] = ["sequence_dir", "annotation", "output_dir", "model", "truth_dir"];

/// Every accepted key besides the `synth.` namespace.
pub const KEYS: [&str; 25] = [
    "sequence_dir",
    "annotation",
    "output_dir",
    "model",
    "truth_dir",
    "k",
    "grid_rows",
    "grid_cols",
    "alpha0",
    "alpha1",
    "seed",
    "worm_samples",
    "cell_samples",
    "em_max_iter",
    "em_tol",
    "smooth_radius",
    "keep_largest",
    "worm_width",
    "n_points",
    "frame_rate",
    "tune_baseline",
    "threshold_low",
    "threshold_high",
    "background_subtraction",
    "bg_threshold",
];

/// Prefix of the scene keys read by `synth`.
pub const SYNTH_PREFIX: &str = "synth.";

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub sequence_dir: Option<PathBuf>,
    pub annotation: Option<PathBuf>,
    pub output_dir: PathBuf,
    model: Option<PathBuf>,
    pub truth_dir: Option<PathBuf>,
    pub learn: LearnConfig,
    pub smooth_radius: Option<usize>,
    pub keep_largest: bool,
    pub worm_width: Option<usize>,
    pub n_points: usize,
    pub frame_rate: f64,
    pub tune_baseline: bool,
    pub baseline: ThresholdConfig,
    /// Scene keys with the `synth.` prefix removed.
    pub scene: KeyValues,
}

fn resolve(kv: &KeyValues, key: &str) -> Option<PathBuf> {
    kv.get(key).filter(|v| !v.is_empty()).map(PathBuf::from)
}

impl PipelineConfig {
    /// Reads `path` (if any), then applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &KeyValues) -> Result<Self> {
        let mut kv = match path {
            Some(p) => {
                let mut kv = KeyValues::read(p, "config").with_context(|| format!("reading config {}", p.display()))?;
                let base = p.parent().unwrap_or(Path::new(""));
                for key in PATH_KEYS {
                    if let Some(v) = resolve(&kv, key).filter(|v| v.is_relative()) {
                        kv.set(key, base.join(v).to_string_lossy());
                    }
                }
                kv
            }
            None => KeyValues::default(),
        };
        kv.extend(overrides);
        Self::from_key_values(&kv)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| !KEYS.contains(k) && !k.starts_with(SYNTH_PREFIX)) {
            bail!("unknown config key `{k}`");
        }
        let d = LearnConfig::default();
        let mut learn = LearnConfig {
            k: kv.parse_or("k", d.k)?,
            grid_rows: kv.parse_or("grid_rows", d.grid_rows)?,
            grid_cols: kv.parse_or("grid_cols", d.grid_cols)?,
            alpha0: kv.parse_or("alpha0", d.alpha0)?,
            alpha1: kv.parse_or("alpha1", d.alpha1)?,
            worm_samples: kv.parse_or("worm_samples", d.worm_samples)?,
            cell_samples: kv.parse_or("cell_samples", d.cell_samples)?,
            seed: kv.parse_or("seed", d.seed)?,
            em: d.em,
        };
        learn.em.max_iter = kv.parse_or("em_max_iter", learn.em.max_iter)?;
        learn.em.tol = kv.parse_or("em_tol", learn.em.tol)?;
        if learn.k == 0 || learn.grid_rows == 0 || learn.grid_cols == 0 {
            bail!("k, grid_rows and grid_cols must be positive");
        }

        let b = ThresholdConfig::default();
        let baseline = ThresholdConfig {
            low: kv.parse_or("threshold_low", b.low)?,
            high: kv.parse_or("threshold_high", b.high)?,
            use_background_subtraction: kv.parse_or("background_subtraction", b.use_background_subtraction)?,
            bg_threshold: kv.parse_or("bg_threshold", b.bg_threshold)?,
            smooth_radius: b.smooth_radius,
        };
        baseline.validate()?;

        let frame_rate: f64 = kv.parse_or("frame_rate", 30.0)?;
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            bail!("frame_rate must be positive, got {frame_rate}");
        }
        let n_points: usize = kv.parse_or("n_points", DEFAULT_POINTS)?;
        if n_points < 5 {
            bail!("n_points must be at least 5, got {n_points}");
        }
        let smooth_radius: Option<usize> = kv.parse_opt("smooth_radius")?;
        if smooth_radius == Some(0) {
            bail!("smooth_radius must be at least 1");
        }
        let worm_width: Option<usize> = kv.parse_opt("worm_width")?;
        if worm_width == Some(0) {
            bail!("worm_width must be positive");
        }

        let mut scene = KeyValues::default();
        for k in kv.keys().filter(|k| k.starts_with(SYNTH_PREFIX)) {
            scene.set(&k[SYNTH_PREFIX.len()..], kv.get(k).unwrap_or_default());
        }
        if !scene.contains("seed") {
            if let Some(s) = kv.get("seed") {
                scene.set("seed", s);
            }
        }

        Ok(Self {
            sequence_dir: resolve(kv, "sequence_dir"),
            annotation: resolve(kv, "annotation"),
            output_dir: resolve(kv, "output_dir").unwrap_or_else(|| PathBuf::from("out")),
            model: resolve(kv, "model"),
            truth_dir: resolve(kv, "truth_dir"),
            learn,
            smooth_radius,
            keep_largest: kv.parse_or("keep_largest", true)?,
            worm_width,
            n_points,
            frame_rate,
            tune_baseline: kv.parse_or("tune_baseline", true)?,
            baseline,
            scene,
        })
    }

    /// Model file path; defaults to `model.txt` in the output directory.
    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.output_dir.join("model.txt"))
    }

    pub fn masks_dir(&self) -> PathBuf {
        self.output_dir.join("masks")
    }

    pub fn sequence_dir(&self) -> Result<&Path> {
        let dir = self.sequence_dir.as_deref().context("config is missing `sequence_dir`")?;
        if !dir.is_dir() {
            bail!("sequence_dir {} is not a directory", dir.display());
        }
        Ok(dir)
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.annotation.as_deref().context("config is missing `annotation`")?;
        if !path.is_file() {
            bail!("annotation manifest {} does not exist", path.display());
        }
        let m = read_manifest(path).with_context(|| format!("reading annotation {}", path.display()))?;
        for (key, p) in [("frame", &m.frame), ("mask", &m.mask)] {
            if !p.is_file() {
                bail!("annotation `{key}` file {} does not exist", p.display());
            }
        }
        Ok(m)
    }

    /// Worm width from `worm_width`, else from the annotation manifest.
    pub fn worm_width(&self) -> Result<usize> {
        match self.worm_width {
            Some(w) => Ok(w),
            None => Ok(self
                .manifest()
                .context("worm width needs `worm_width` or an annotation manifest")?
                .width_px),
        }
    }

    /// `smooth_radius`, defaulting to `max(1, round(W / 10))`.
    pub fn smooth_radius(&self) -> Result<usize> {
        match self.smooth_radius {
            Some(r) => Ok(r),
            None => Ok(meme_core::imagecore::morphology::default_radius(self.worm_width()? as f64)),
        }
    }
}
