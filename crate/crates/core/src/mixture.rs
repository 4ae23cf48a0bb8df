//! Diagonal-covariance Gaussian mixtures and their EM estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Smallest variance EM may assign to any dimension (intensity² units).
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1.0;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix.
    pub variance: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Prepared {
    /// `ln(weight) - 0.5 * sum(ln(2 pi var))`
    offset: f64,
    inv_var: Vec<f64>,
}

/// A weighted sum of axis-aligned Gaussians over `dim`-dimensional vectors.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    dim: usize,
    prepared: Vec<Prepared>,
}

impl PartialEq for GaussianMixture {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.components == other.components
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("a mixture needs at least one component".into()))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("mixture dimension must be positive".into()));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != dim || c.variance.len() != dim {
                return Err(Error::FeatureDimension {
                    expected: dim,
                    got: c.mean.len().max(c.variance.len()),
                });
            }
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "component {i} weight {} outside (0, 1]",
                    c.weight
                )));
            }
            if c.variance.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "component {i} has a non-positive variance"
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "component {i} has a non-finite mean"
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "component weights sum to {total}, expected 1"
            )));
        }
        let prepared = components.iter().map(prepare).collect();
        Ok(Self {
            components,
            dim,
            prepared,
        })
    }

    /// A single Gaussian with weight 1.
    pub fn single(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        Self::new(vec![GaussianComponent {
            weight: 1.0,
            mean,
            variance,
        }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::FeatureDimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `ln(weight_i) + ln N(x; mean_i, var_i)` for component `i`.
    #[inline]
    pub(crate) fn weighted_log_component(&self, i: usize, x: &[f64]) -> f64 {
        let p = &self.prepared[i];
        let mean = &self.components[i].mean;
        let mut q = 0.0;
        for ((&xi, &mi), &iv) in x.iter().zip(mean).zip(&p.inv_var) {
            let d = xi - mi;
            q += d * d * iv;
        }
        p.offset - 0.5 * q
    }

    #[inline]
    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        if self.components.len() == 1 {
            return self.weighted_log_component(0, x);
        }
        let mut best = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 8];
        let mut heap;
        let buf: &mut [f64] = if self.components.len() <= terms.len() {
            &mut terms[..self.components.len()]
        } else {
            heap = vec![0.0; self.components.len()];
            &mut heap
        };
        for (i, t) in buf.iter_mut().enumerate() {
            *t = self.weighted_log_component(i, x);
            best = best.max(*t);
        }
        if best == f64::NEG_INFINITY {
            return best;
        }
        best + buf.iter().map(|t| (t - best).exp()).sum::<f64>().ln()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.log_density_unchecked(x))
    }

    /// `sum_i weight_i * N(x; mean_i, diag(var_i))`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }

    /// Number of free parameters: one weight plus a mean and a variance per dimension, per component.
    pub fn parameter_count(&self) -> usize {
        self.k() * (1 + 2 * self.dim)
    }
}

fn prepare(c: &GaussianComponent) -> Prepared {
    let log_det: f64 = c.variance.iter().map(|v| v.ln()).sum();
    Prepared {
        offset: c.weight.ln() - 0.5 * (c.variance.len() as f64 * LN_2PI + log_det),
        inv_var: c.variance.iter().map(|v| 1.0 / v).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct EmConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the mean log-likelihood improves by less than this.
    pub tol: f64,
    pub seed: u64,
    pub variance_floor: f64,
}

impl EmConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            ..Self::default()
        }
    }
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed: 0,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Mean per-sample log-likelihood before the first M-step and after every
    /// subsequent one; the last entry belongs to `mixture`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Flat, row-major sample matrix.
struct Samples {
    data: Vec<f64>,
    dim: usize,
}

impl Samples {
    fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn kmeanspp_means(samples: &Samples, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = samples.n();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(samples.row(rng.random_range(0..n)).to_vec());
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut nearest: Vec<f64> = (0..n).map(|i| sq(samples.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = samples.row(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq(samples.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

/// E-step: fills `resp` (n x k) with responsibilities, returns the mean log-likelihood.
fn e_step(mix: &GaussianMixture, samples: &Samples, resp: &mut [f64]) -> f64 {
    let k = mix.k();
    let mut total = 0.0;
    for i in 0..samples.n() {
        let x = samples.row(i);
        let r = &mut resp[i * k..(i + 1) * k];
        let mut best = f64::NEG_INFINITY;
        for (j, rj) in r.iter_mut().enumerate() {
            *rj = mix.weighted_log_component(j, x);
            best = best.max(*rj);
        }
        let mut sum = 0.0;
        for rj in r.iter_mut() {
            *rj = (*rj - best).exp();
            sum += *rj;
        }
        for rj in r.iter_mut() {
            *rj /= sum;
        }
        total += best + sum.ln();
    }
    total / samples.n() as f64
}

fn m_step(
    prev: &GaussianMixture,
    samples: &Samples,
    resp: &[f64],
    floor: f64,
) -> Result<GaussianMixture> {
    let (k, dim, n) = (prev.k(), samples.dim, samples.n());
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
        let old = &prev.components()[j];
        if nk <= f64::MIN_POSITIVE {
            // A component that explains nothing keeps its shape; only its weight collapses.
            components.push(GaussianComponent {
                weight: 0.0,
                mean: old.mean.clone(),
                variance: old.variance.clone(),
            });
            continue;
        }
        let mut mean = vec![0.0; dim];
        for i in 0..n {
            let r = resp[i * k + j];
            for (m, &x) in mean.iter_mut().zip(samples.row(i)) {
                *m += r * x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; dim];
        for i in 0..n {
            let r = resp[i * k + j];
            for ((v, &x), &m) in var.iter_mut().zip(samples.row(i)).zip(&mean) {
                *v += r * (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v = (*v / nk).max(floor));
        components.push(GaussianComponent {
            weight: nk / n as f64,
            mean,
            variance: var,
        });
    }
    normalize_weights(&mut components);
    GaussianMixture::new(components)
}

fn normalize_weights(components: &mut [GaussianComponent]) {
    for c in components.iter_mut() {
        c.weight = c.weight.max(WEIGHT_FLOOR);
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in components.iter_mut() {
        c.weight /= total;
    }
}

/// Fits a `k`-component diagonal mixture by expectation-maximization.
///
/// Means are seeded k-means++ style from `config.seed`; weights start uniform
/// and every variance starts at the per-dimension sample variance. Variances
/// never drop below `config.variance_floor`. The mean log-likelihood in
/// [`EmFit::trace`] is non-decreasing.
pub fn fit_em(samples: &[Vec<f64>], config: &EmConfig) -> Result<EmFit> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples {
            needed: config.k.max(1),
            got: 0,
        });
    }
    if config.k == 0 {
        return Err(Error::InvalidArgument("component count must be positive".into()));
    }
    if samples.len() < config.k {
        return Err(Error::TooFewSamples {
            needed: config.k,
            got: samples.len(),
        });
    }
    if !(config.variance_floor > 0.0) {
        return Err(Error::InvalidArgument("variance floor must be positive".into()));
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(Error::InvalidArgument("samples must have positive dimension".into()));
    }
    let mut data = Vec::with_capacity(samples.len() * dim);
    for s in samples {
        if s.len() != dim {
            return Err(Error::FeatureDimension {
                expected: dim,
                got: s.len(),
            });
        }
        data.extend_from_slice(s);
    }
    let samples = Samples { data, dim };
    let n = samples.n();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let means = kmeanspp_means(&samples, config.k, &mut rng);
    let mut mu = vec![0.0; dim];
    for i in 0..n {
        for (m, &x) in mu.iter_mut().zip(samples.row(i)) {
            *m += x;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for i in 0..n {
        for ((v, &x), &m) in var.iter_mut().zip(samples.row(i)).zip(&mu) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut()
        .for_each(|v| *v = (*v / n as f64).max(config.variance_floor));
    let mut mixture = GaussianMixture::new(
        means
            .into_iter()
            .map(|mean| GaussianComponent {
                weight: 1.0 / config.k as f64,
                mean,
                variance: var.clone(),
            })
            .collect(),
    )?;

    let mut resp = vec![0.0; n * config.k];
    let mut ll = e_step(&mixture, &samples, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        mixture = m_step(&mixture, &samples, &resp, config.variance_floor)?;
        iterations += 1;
        let next = e_step(&mixture, &samples, &mut resp);
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain < config.tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        mixture,
        trace,
        iterations,
        converged,
    })
}
