//! One-shot learning of worm and background appearance mixtures and the
//! likelihood-ratio segmentation built on them.
//!
//! The worm model `F_W` is a single mixture over patch vectors sampled inside
//! the annotated mask. The background is split into a grid of non-overlapping
//! cells, each with its own mixture `F_B^c` fitted to patches that stay clear of
//! the (dilated) annotation. A pixel is labeled worm when
//! `F_W(x) / F_B^c(x) > 1` for the cell `c` that contains it.

mod grid;
mod manifest;
mod model_file;
mod patch;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use grid::CellGrid;
pub use manifest::{read_manifest, Manifest};
pub use model_file::{read_model, write_model, MODEL_FORMAT_VERSION};
pub use patch::{compute_patch_size, extract_patch, PatchConfig, DEFAULT_ALPHA0, DEFAULT_ALPHA1};

use crate::error::{Error, Result};
use crate::imagecore::morphology::{self, morph_open_close};
use crate::imagecore::{largest_component, BinaryMask, Connectivity, GrayImage};
use crate::mixture::{fit_em, EmConfig, GaussianMixture};
use crate::seed::derive_seed;

pub const DEFAULT_K: usize = 2;
pub const DEFAULT_GRID: (usize, usize) = (10, 10);
pub const DEFAULT_WORM_SAMPLES: usize = 2000;
pub const DEFAULT_CELL_SAMPLES: usize = 500;

/// The annotation `U = {I_U, S_U, W_U}`.
#[derive(Clone, Debug)]
pub struct UserInput {
    pub image: GrayImage,
    pub worm_mask: BinaryMask,
    /// Worm width in pixels.
    pub worm_width: usize,
}

impl UserInput {
    pub fn new(image: GrayImage, worm_mask: BinaryMask, worm_width: usize) -> Result<Self> {
        if image.dims() != worm_mask.dims() {
            return Err(Error::dims(image.dims(), worm_mask.dims()));
        }
        if worm_mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        let limit = image.width().min(image.height());
        if worm_width == 0 || worm_width > limit {
            return Err(Error::InvalidArgument(format!(
                "worm width {worm_width} outside [1, {limit}]"
            )));
        }
        Ok(Self {
            image,
            worm_mask,
            worm_width,
        })
    }

    /// Radius used to keep background samples away from the annotated worm.
    pub fn exclusion_radius(&self) -> usize {
        ((self.worm_width as f64 / 2.0).round() as usize).max(1)
    }
}

/// Parameters of the learning stage.
#[derive(Clone, Debug)]
pub struct LearnConfig {
    pub k: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub alpha0: f64,
    pub alpha1: f64,
    /// Upper bound on worm samples; the actual count is `min(cap, |S_U|)`.
    pub worm_samples: usize,
    /// Upper bound on samples per background cell.
    pub cell_samples: usize,
    pub seed: u64,
    pub em: EmConfig,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            grid_rows: DEFAULT_GRID.0,
            grid_cols: DEFAULT_GRID.1,
            alpha0: DEFAULT_ALPHA0,
            alpha1: DEFAULT_ALPHA1,
            worm_samples: DEFAULT_WORM_SAMPLES,
            cell_samples: DEFAULT_CELL_SAMPLES,
            seed: 0,
            em: EmConfig::default(),
        }
    }
}

/// Learned `(F_W, F_B)` plus the geometry needed to apply them.
#[derive(Clone, Debug, PartialEq)]
pub struct AppearanceModel {
    pub worm: GaussianMixture,
    pub background: Vec<GaussianMixture>,
    pub grid: CellGrid,
    pub patch: PatchConfig,
    pub k: usize,
}

impl AppearanceModel {
    pub fn new(
        worm: GaussianMixture,
        background: Vec<GaussianMixture>,
        grid: CellGrid,
        patch: PatchConfig,
    ) -> Result<Self> {
        if background.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} background mixtures for a grid of {} cells",
                background.len(),
                grid.len()
            )));
        }
        let (k, dim) = (worm.k(), patch.dim());
        for m in std::iter::once(&worm).chain(&background) {
            if m.dim() != dim {
                return Err(Error::FeatureDimension {
                    expected: dim,
                    got: m.dim(),
                });
            }
            if m.k() != k {
                return Err(Error::InvalidArgument(format!(
                    "mixtures disagree on component count ({} vs {k})",
                    m.k()
                )));
            }
        }
        Ok(Self {
            worm,
            background,
            grid,
            patch,
            k,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.grid.width, self.grid.height)
    }

    /// Free parameters across all background cells: `K * n_cells * (1 + 2 d²)`,
    /// which is `3 K n_cells` for single-pixel features.
    pub fn background_parameter_count(&self) -> usize {
        self.background.iter().map(GaussianMixture::parameter_count).sum()
    }

    pub fn log_likelihood_ratio(&self, x: &[f64], cell: usize) -> Result<f64> {
        let bg = self.background.get(cell).ok_or_else(|| {
            Error::InvalidArgument(format!("cell index {cell} outside grid of {}", self.grid.len()))
        })?;
        Ok(self.worm.log_density(x)? - bg.log_density(x)?)
    }

    /// `F_W(x) / F_B^c(x)`, the ratio of the two mixture densities.
    pub fn likelihood_ratio(&self, x: &[f64], cell: usize) -> Result<f64> {
        self.log_likelihood_ratio(x, cell).map(f64::exp)
    }

    /// `sum_i pi_i^W G_i^W(x) / (pi_i^c G_i^c(x))`, pairing components by index.
    /// Kept for comparison with the mixture-density ratio; segmentation does not use it.
    pub fn componentwise_ratio(&self, x: &[f64], cell: usize) -> Result<f64> {
        self.log_componentwise_ratio(x, cell).map(f64::exp)
    }

    pub fn log_componentwise_ratio(&self, x: &[f64], cell: usize) -> Result<f64> {
        let bg = self.background.get(cell).ok_or_else(|| {
            Error::InvalidArgument(format!("cell index {cell} outside grid of {}", self.grid.len()))
        })?;
        if x.len() != self.worm.dim() {
            return Err(Error::FeatureDimension {
                expected: self.worm.dim(),
                got: x.len(),
            });
        }
        Ok(self.log_componentwise_unchecked(bg, x))
    }

    fn log_componentwise_unchecked(&self, bg: &GaussianMixture, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.k)
            .map(|i| self.worm.weighted_log_component(i, x) - bg.weighted_log_component(i, x))
            .collect();
        let best = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best + terms.iter().map(|t| (t - best).exp()).sum::<f64>().ln()
    }
}

/// Which ratio drives the per-pixel decision.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum RatioRule {
    /// Ratio of the full mixture densities.
    #[default]
    MixtureDensity,
    /// Sum of per-component ratios, pairing components by index.
    Componentwise,
}

fn sample_patches(
    image: &GrayImage,
    locations: &[(usize, usize)],
    d: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let (x, y) = locations[rng.random_range(0..locations.len())];
            let mut p = vec![0.0; d * d];
            patch::fill_patch(image, x, y, d, &mut p);
            p
        })
        .collect()
}

/// Fits `F_W` to patches drawn uniformly, with replacement, from the annotated region.
pub fn learn_worm_model(
    input: &UserInput,
    patch: &PatchConfig,
    k: usize,
    n_samples: usize,
    seed: u64,
    em: &EmConfig,
) -> Result<GaussianMixture> {
    patch.validate(input.worm_width)?;
    let region = input.worm_mask.pixels();
    if region.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            got: region.len(),
        });
    }
    let count = n_samples.min(region.len()).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_patches(&input.image, &region, patch.d, count, &mut rng);
    let cfg = EmConfig {
        k,
        seed: derive_seed(seed, u64::MAX),
        ..em.clone()
    };
    Ok(fit_em(&samples, &cfg)?.mixture)
}

/// Background mixtures for every grid cell, plus where each came from.
#[derive(Clone, Debug)]
pub struct BackgroundCells {
    pub mixtures: Vec<GaussianMixture>,
    /// `source[c] == c` when cell `c` was fitted directly, otherwise the index of
    /// the nearest fitted cell whose model was copied.
    pub source: Vec<usize>,
}

/// Fits one mixture per grid cell from pixels outside the dilated annotation.
/// Cells left with fewer than `k` usable pixels copy the model of the nearest
/// fitted cell (by centre distance, ties to the lower index).
pub fn learn_background_model(
    input: &UserInput,
    patch: &PatchConfig,
    k: usize,
    grid: &CellGrid,
    n_samples_per_cell: usize,
    seed: u64,
    em: &EmConfig,
) -> Result<BackgroundCells> {
    patch.validate(input.worm_width)?;
    if grid.dims() != input.image.dims() {
        return Err(Error::dims(grid.dims(), input.image.dims()));
    }
    let excluded = morphology::dilate(&input.worm_mask, input.exclusion_radius());
    let fitted: Vec<Option<GaussianMixture>> = (0..grid.len())
        .into_par_iter()
        .map(|c| -> Result<Option<GaussianMixture>> {
            let (x0, x1, y0, y1) = grid.bounds(c);
            let usable: Vec<(usize, usize)> = (y0..y1)
                .flat_map(|y| (x0..x1).map(move |x| (x, y)))
                .filter(|&(x, y)| !excluded.get(x, y))
                .collect();
            if usable.len() < k {
                return Ok(None);
            }
            let cell_seed = derive_seed(seed, c as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
            let count = n_samples_per_cell.min(usable.len()).max(k);
            let samples = sample_patches(&input.image, &usable, patch.d, count, &mut rng);
            let cfg = EmConfig {
                k,
                seed: derive_seed(cell_seed, u64::MAX),
                ..em.clone()
            };
            Ok(Some(fit_em(&samples, &cfg)?.mixture))
        })
        .collect::<Result<_>>()?;

    let fitted_ids: Vec<usize> = (0..grid.len()).filter(|&c| fitted[c].is_some()).collect();
    if fitted_ids.is_empty() {
        return Err(Error::AllCellsCovered);
    }
    let source: Vec<usize> = (0..grid.len())
        .map(|c| {
            if fitted[c].is_some() {
                return c;
            }
            let (cx, cy) = grid.center(c);
            *fitted_ids
                .iter()
                .min_by(|&&a, &&b| {
                    let da = dist2(grid.center(a), (cx, cy));
                    let db = dist2(grid.center(b), (cx, cy));
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .expect("at least one fitted cell")
        })
        .collect();
    let mixtures = source
        .iter()
        .map(|&s| fitted[s].clone().expect("source cells are fitted"))
        .collect();
    Ok(BackgroundCells { mixtures, source })
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Learns the complete appearance model from a single annotated frame.
pub fn learn_model(input: &UserInput, config: &LearnConfig) -> Result<AppearanceModel> {
    let (w, h) = input.image.dims();
    let patch = PatchConfig::from_width(input.worm_width, w, h, config.alpha0, config.alpha1);
    let grid = CellGrid::new(w, h, config.grid_rows, config.grid_cols)?;
    let worm = learn_worm_model(
        input,
        &patch,
        config.k,
        config.worm_samples,
        config.seed,
        &config.em,
    )?;
    let background = learn_background_model(
        input,
        &patch,
        config.k,
        &grid,
        config.cell_samples,
        derive_seed(config.seed, 0x00C0_FFEE),
        &config.em,
    )?;
    AppearanceModel::new(worm, background.mixtures, grid, patch)
}

/// Per-pixel decision `r(f(u, v; I, d), c) > 1` with no post-processing.
pub fn classify_frame(model: &AppearanceModel, frame: &GrayImage, rule: RatioRule) -> Result<BinaryMask> {
    if frame.dims() != model.dims() {
        return Err(Error::dims(model.dims(), frame.dims()));
    }
    let (w, h) = frame.dims();
    let d = model.patch.d;
    let rows: Vec<Vec<bool>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut buf = vec![0.0; d * d];
            (0..w)
                .map(|x| {
                    patch::fill_patch(frame, x, y, d, &mut buf);
                    let bg = &model.background[model.grid.cell_of(x, y)];
                    let log_ratio = match rule {
                        RatioRule::MixtureDensity => {
                            model.worm.log_density_unchecked(&buf) - bg.log_density_unchecked(&buf)
                        }
                        RatioRule::Componentwise => model.log_componentwise_unchecked(bg, &buf),
                    };
                    log_ratio > 0.0
                })
                .collect()
        })
        .collect();
    BinaryMask::new(w, h, rows.into_iter().flatten().collect())
}

/// Segments one frame: likelihood-ratio labels, open/close smoothing, and
/// optionally only the largest 8-connected region.
pub fn segment_frame(
    model: &AppearanceModel,
    frame: &GrayImage,
    smooth_radius: usize,
    keep_largest: bool,
) -> Result<BinaryMask> {
    let raw = classify_frame(model, frame, RatioRule::MixtureDensity)?;
    let smooth = morph_open_close(&raw, smooth_radius);
    Ok(if keep_largest {
        largest_component(&smooth, Connectivity::Eight)
    } else {
        smooth
    })
}
