use super::distance::DistanceField;
use super::{Point, Skeleton};
use crate::error::{Error, Result};
use crate::imagecore::BinaryMask;

/// The eight unit steps `V`, row-major over `(dy, dx)`.
pub const DIRECTIONS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

pub const DEFAULT_PRIOR_FLOOR: f64 = 1e-3;

/// Distribution `P_tau(nu)` over the eight step directions.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionPrior {
    probabilities: [f64; 8],
    floor: f64,
}

impl DirectionPrior {
    pub fn uniform(floor: f64) -> Result<Self> {
        if !(0.0..=0.125).contains(&floor) {
            return Err(Error::InvalidArgument(format!(
                "prior floor {floor} outside [0, 1/8]"
            )));
        }
        Ok(Self {
            probabilities: [0.125; 8],
            floor,
        })
    }

    pub fn probabilities(&self) -> &[f64; 8] {
        &self.probabilities
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `P_{tau+1} ∝ likelihood * P_tau`, then every entry is lifted to the floor
    /// and the surplus is taken proportionally from the others.
    pub fn update(&mut self, likelihood: &[f64; 8]) {
        self.update_with_memory(likelihood, 1.0);
    }

    /// `P_{tau+1} ∝ likelihood * P_tau^memory`: `memory = 1` is the plain Bayes
    /// update, smaller values let old evidence decay geometrically.
    pub fn update_with_memory(&mut self, likelihood: &[f64; 8], memory: f64) {
        let mut p = [0.0; 8];
        for i in 0..8 {
            p[i] = likelihood[i] * self.probabilities[i].powf(memory);
        }
        let total: f64 = p.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return;
        }
        p.iter_mut().for_each(|v| *v /= total);

        let mut pinned = [false; 8];
        loop {
            let fixed = pinned.iter().filter(|&&b| b).count() as f64 * self.floor;
            let free: f64 = (0..8).filter(|&i| !pinned[i]).map(|i| p[i]).sum();
            let scale = (1.0 - fixed) / free;
            let mut changed = false;
            for i in 0..8 {
                if !pinned[i] && p[i] * scale < self.floor {
                    pinned[i] = true;
                    changed = true;
                }
            }
            if !changed {
                for i in 0..8 {
                    p[i] = if pinned[i] { self.floor } else { p[i] * scale };
                }
                break;
            }
        }
        self.probabilities = p;
    }
}

/// Walker settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceOptions {
    pub prior_floor: f64,
    /// Break exact score ties by the summed distance around each candidate
    /// before falling back to direction order.
    pub lookahead_ties: bool,
    /// End the walk when the MAP step points backwards relative to the recent heading.
    pub stop_on_reversal: bool,
    /// Number of recent steps summed into the heading.
    pub heading_window: usize,
    /// Exponent applied to the previous prior in each update. 1 accumulates all
    /// past likelihoods; 0 makes the prior the previous step's likelihood.
    pub prior_memory: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            prior_floor: DEFAULT_PRIOR_FLOOR,
            lookahead_ties: true,
            stop_on_reversal: true,
            heading_window: 6,
            prior_memory: 0.0,
        }
    }
}

fn neighbour_sum(d: &DistanceField, x: i64, y: i64) -> f64 {
    DIRECTIONS.iter().map(|&(dx, dy)| d.get_signed(x + dx, y + dy)).sum()
}

/// MAP walk along the distance ridge with the default options.
pub fn trace_skeleton(field: &DistanceField, mask: &BinaryMask, l0: (usize, usize), prior_floor: f64) -> Result<Skeleton> {
    trace_skeleton_with(
        field,
        mask,
        l0,
        &TraceOptions {
            prior_floor,
            ..TraceOptions::default()
        },
    )
}

/// Walks from `l0`: at each pixel the step maximizes `P(l | nu) P_tau(nu)` with
/// `P(l | nu) = D(l + nu) / sum D(l + nu')`; the pixel left behind is zeroed and
/// the prior updated. The walk ends when no neighbour has positive distance, when
/// a step turns against the heading summed over the last few steps, or after one
/// step per worm pixel. The walk is then extended straight along that heading
/// while the pixel ahead lies in the mask.
pub fn trace_skeleton_with(
    field: &DistanceField,
    mask: &BinaryMask,
    l0: (usize, usize),
    options: &TraceOptions,
) -> Result<Skeleton> {
    if field.dims() != mask.dims() {
        return Err(Error::dims(field.dims(), mask.dims()));
    }
    let (w, h) = field.dims();
    if l0.0 >= w || l0.1 >= h {
        return Err(Error::OutOfBounds {
            x: l0.0,
            y: l0.1,
            width: w,
            height: h,
        });
    }
    let mut d = field.clone();
    let mut prior = DirectionPrior::uniform(options.prior_floor)?;
    let mut visited = vec![false; w * h];
    let mut points = vec![l0];
    visited[l0.1 * w + l0.0] = true;
    let budget = mask.count();
    let (mut x, mut y) = (l0.0 as i64, l0.1 as i64);
    let mut recent: std::collections::VecDeque<(i64, i64)> = std::collections::VecDeque::new();

    while points.len() <= budget {
        let mut lik = [0.0; 8];
        for (i, &(dx, dy)) in DIRECTIONS.iter().enumerate() {
            lik[i] = d.get_signed(x + dx, y + dy);
        }
        let total: f64 = lik.iter().sum();
        if total <= 0.0 {
            if points.len() == 1 {
                return Err(Error::CannotStart { x: l0.0, y: l0.1 });
            }
            break;
        }
        lik.iter_mut().for_each(|v| *v /= total);
        d.set(x as usize, y as usize, 0.0);

        let scores: Vec<f64> = (0..8).map(|i| lik[i] * prior.probabilities()[i]).collect();
        let best_score = scores.iter().copied().fold(0.0, f64::max);
        let tol = best_score * 1e-12;
        let tied: Vec<usize> = (0..8).filter(|&i| best_score - scores[i] <= tol && scores[i] > 0.0).collect();
        let choice = if options.lookahead_ties && tied.len() > 1 {
            let look = |i: usize| {
                let (dx, dy) = DIRECTIONS[i];
                neighbour_sum(&d, x + dx, y + dy)
            };
            let top = tied.iter().map(|&i| look(i)).fold(f64::NEG_INFINITY, f64::max);
            *tied.iter().find(|&&i| look(i) >= top).expect("maximum is attained")
        } else {
            tied[0]
        };
        let step = DIRECTIONS[choice];
        if options.stop_on_reversal {
            let heading = recent.iter().fold((0, 0), |a, s| (a.0 + s.0, a.1 + s.1));
            if heading.0 * step.0 + heading.1 * step.1 < 0 {
                break;
            }
        }
        prior.update_with_memory(&lik, options.prior_memory);
        x += step.0;
        y += step.1;
        let idx = y as usize * w + x as usize;
        if visited[idx] {
            return Err(Error::DegenerateSkeleton(format!("walker revisited ({x}, {y})")));
        }
        visited[idx] = true;
        points.push((x as usize, y as usize));
        recent.push_back(step);
        if recent.len() > options.heading_window.max(1) {
            recent.pop_front();
        }
    }

    // run straight out to the tip along the final heading
    let heading = recent.iter().fold((0, 0), |a, s| (a.0 + s.0, a.1 + s.1));
    if heading != (0, 0) {
        let hn = ((heading.0 * heading.0 + heading.1 * heading.1) as f64).sqrt();
        while points.len() <= budget {
            let next = (0..8)
                .filter_map(|i| {
                    let (dx, dy) = DIRECTIONS[i];
                    let (nx, ny) = (x + dx, y + dy);
                    let cos = (heading.0 * dx + heading.1 * dy) as f64 / (hn * ((dx * dx + dy * dy) as f64).sqrt());
                    (cos > 0.85 && mask.get_signed(nx, ny) && !visited[ny as usize * w + nx as usize]).then_some((i, cos))
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            let Some((i, _)) = next else { break };
            x += DIRECTIONS[i].0;
            y += DIRECTIONS[i].1;
            visited[y as usize * w + x as usize] = true;
            points.push((x as usize, y as usize));
        }
    }

    Ok(Skeleton::from_points(
        points.into_iter().map(|(x, y)| Point::new(x as f64, y as f64)).collect(),
    ))
}
