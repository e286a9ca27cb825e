//! `(n, eps)`-separated subsets of the Julia set and their partition sums.
//!
//! Two constructions are available. [`Construction::Pullback`] takes a greedy
//! `eps`-net `F_1` of the sample and pulls it back: the level-`n` set consists
//! of `(n-1)`-fold preimages of `F_1`. Two preimages of different level-`(n-1)`
//! points are `(n, eps)`-separated automatically, so only siblings can
//! conflict, and a greedy pass over siblings yields a maximal separated subset
//! of the pulled-back pool. [`Construction::Greedy`] runs the greedy pass with
//! `d_n` directly over forward orbits of the sample; it saturates once the
//! sample is exhausted and is mainly a reference.
//!
//! Birkhoff sums follow the tree: `S_{n+1} phi(w) = phi(w) + S_n phi(f w)`.

use crate::map::{MapError, Metric, RationalMap};
use crate::numerics::log_sum_exp_scaled;
use crate::potential::{Potential, PotentialError};
use crate::sampler::JuliaSample;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const DEFAULT_MAX_NODES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeparatedError {
    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("n must be at least 1")]
    ZeroN,
    #[error("sample is empty")]
    EmptySample,
    #[error("level {n} would hold {nodes} points, over the budget of {budget}")]
    TooManyNodes { n: usize, nodes: usize, budget: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    Pullback,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedOptions {
    pub epsilon: f64,
    /// Base metric; `None` picks the map's default.
    pub metric: Option<Metric>,
    pub construction: Construction,
    pub max_nodes: usize,
}

impl SeparatedOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            metric: None,
            construction: Construction::Pullback,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }

    pub fn with_construction(mut self, construction: Construction) -> Self {
        self.construction = construction;
        self
    }
}

/// One level of the construction: the Birkhoff sums `S_n phi` over the chosen set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedLevel {
    pub n: usize,
    /// Size of the pool the level was selected from.
    pub candidates: usize,
    pub sums: Vec<f64>,
}

impl SeparatedLevel {
    pub fn size(&self) -> usize {
        self.sums.len()
    }
}

/// Separated sets for `n = 1..=n_max` with the sums of one potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSets {
    pub epsilon: f64,
    pub metric: Metric,
    pub construction: Construction,
    /// Fraction of sample points with no neighbour closer than `eps / 4`.
    pub sparse_fraction: f64,
    /// Set when the median nearest-neighbour spacing is not below `eps / 4`.
    pub lower_bound: bool,
    pub levels: Vec<SeparatedLevel>,
}

impl SeparatedSets {
    pub fn build(
        map: &RationalMap,
        phi: &Potential,
        sample: &JuliaSample,
        n_max: usize,
        opts: &SeparatedOptions,
    ) -> Result<Self, SeparatedError> {
        if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
            return Err(SeparatedError::NonPositiveEpsilon(opts.epsilon));
        }
        if n_max == 0 {
            return Err(SeparatedError::ZeroN);
        }
        if sample.points.is_empty() {
            return Err(SeparatedError::EmptySample);
        }
        let metric = opts.metric.unwrap_or_else(|| map.default_metric());
        let ordered = deterministic_order(&sample.points);
        let sparse_fraction = sparse_fraction(&ordered, metric, opts.epsilon / 4.0);
        let levels = match opts.construction {
            Construction::Pullback => pullback_levels(map, phi, &ordered, n_max, metric, opts)?,
            Construction::Greedy => greedy_levels(map, phi, &ordered, n_max, metric, opts.epsilon)?,
        };
        Ok(Self {
            epsilon: opts.epsilon,
            metric,
            construction: opts.construction,
            sparse_fraction,
            lower_bound: sparse_fraction >= 0.5,
            levels,
        })
    }

    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &SeparatedLevel {
        &self.levels[n - 1]
    }

    /// `ln sum exp(s S_n phi)` over the level-`n` set; zero for `n = 0`.
    pub fn log_sum(&self, n: usize, s: f64) -> f64 {
        if n == 0 {
            0.0
        } else {
            log_sum_exp_scaled(&self.level(n).sums, s)
        }
    }

    /// `(1/n) ln sum exp(s S_n phi)`.
    pub fn raw(&self, n: usize, s: f64) -> f64 {
        self.log_sum(n, s) / n as f64
    }

    /// One-step growth rate `ln Sigma_n - ln Sigma_{n-1}`. The `eps`-dependent
    /// prefactor `ln #F_1` that dominates the raw value at small `n` cancels.
    pub fn rate(&self, n: usize, s: f64) -> f64 {
        self.log_sum(n, s) - self.log_sum(n - 1, s)
    }

    /// Mean growth rate over the last `window` levels ending at `n`.
    pub fn tail_rate(&self, n: usize, window: usize, s: f64) -> f64 {
        let w = window.clamp(1, n);
        (self.log_sum(n, s) - self.log_sum(n - w, s)) / w as f64
    }
}

/// Summary of a single separated-set evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedValue {
    pub n: usize,
    pub epsilon: f64,
    pub set_size: usize,
    pub log_sum: f64,
    /// `(1/n) ln Sigma_n`.
    pub raw: f64,
    /// `ln Sigma_n - ln Sigma_{n-1}`, the pressure estimate.
    pub value: f64,
    pub lower_bound: bool,
}

pub fn separated_pressure(
    map: &RationalMap,
    phi: &Potential,
    sample: &JuliaSample,
    n: usize,
    opts: &SeparatedOptions,
) -> Result<SeparatedValue, SeparatedError> {
    let sets = SeparatedSets::build(map, phi, sample, n, opts)?;
    Ok(SeparatedValue {
        n,
        epsilon: opts.epsilon,
        set_size: sets.level(n).size(),
        log_sum: sets.log_sum(n, 1.0),
        raw: sets.raw(n, 1.0),
        value: sets.rate(n, 1.0),
        lower_bound: sets.lower_bound,
    })
}

/// Sample points sorted by angle, then modulus, then input index.
fn deterministic_order(points: &[Complex64]) -> Vec<Complex64> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (za, zb) = (points[a], points[b]);
        za.arg()
            .total_cmp(&zb.arg())
            .then(za.norm().total_cmp(&zb.norm()))
            .then(a.cmp(&b))
    });
    idx.into_iter().map(|i| points[i]).collect()
}

/// Square grid on which every pair within `radius` (in `metric`) lies in
/// adjacent cells.
struct Grid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Complex64], metric: Metric, radius: f64) -> Self {
        let cell = match metric {
            Metric::Euclidean => radius,
            // chordal(a, b) >= 2|a - b| / (1 + R^2) for |a|, |b| <= R
            Metric::Chordal => {
                let r2 = points.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
                radius * (1.0 + r2) / 2.0
            }
        };
        Self {
            cell: if cell.is_finite() { cell } else { f64::MAX },
            buckets: HashMap::new(),
        }
    }

    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn insert(&mut self, z: Complex64, id: usize) {
        self.buckets.entry(self.key(z)).or_default().push(id);
    }

    fn near(&self, z: Complex64) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.key(z);
        (-1..=1)
            .flat_map(move |di| (-1..=1).map(move |dj| (i + di, j + dj)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

fn sparse_fraction(points: &[Complex64], metric: Metric, radius: f64) -> f64 {
    let mut grid = Grid::new(points, metric, radius);
    for (i, &z) in points.iter().enumerate() {
        grid.insert(z, i);
    }
    let sparse = points
        .par_iter()
        .enumerate()
        .filter(|&(i, &z)| !grid.near(z).any(|j| j != i && metric.dist(z, points[j]) < radius))
        .count();
    sparse as f64 / points.len() as f64
}

/// Greedy `eps`-net of the (ordered) sample.
fn greedy_net(points: &[Complex64], metric: Metric, eps: f64) -> Vec<Complex64> {
    let mut grid = Grid::new(points, metric, eps);
    let mut chosen: Vec<Complex64> = Vec::new();
    for &z in points {
        if grid.near(z).all(|j| metric.dist(z, chosen[j]) > eps) {
            grid.insert(z, chosen.len());
            chosen.push(z);
        }
    }
    chosen
}

fn pullback_levels(
    map: &RationalMap,
    phi: &Potential,
    ordered: &[Complex64],
    n_max: usize,
    metric: Metric,
    opts: &SeparatedOptions,
) -> Result<Vec<SeparatedLevel>, SeparatedError> {
    let eps = opts.epsilon;
    let base = greedy_net(ordered, metric, eps);
    let sums = base
        .par_iter()
        .map(|&z| phi.eval(map, z))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut levels = vec![SeparatedLevel {
        n: 1,
        candidates: ordered.len(),
        sums: sums.clone(),
    }];
    let mut nodes: Vec<(Complex64, f64)> = base.into_iter().zip(sums).collect();

    for n in 2..=n_max {
        let pool = nodes.len() * map.degree();
        if pool > opts.max_nodes {
            return Err(SeparatedError::TooManyNodes {
                n,
                nodes: pool,
                budget: opts.max_nodes,
            });
        }
        let children: Vec<Vec<(Complex64, f64)>> = nodes
            .par_iter()
            .map(|&(u, s)| -> Result<_, SeparatedError> {
                let pre = deterministic_order(&map.preimages(u)?);
                let mut kept: Vec<(Complex64, f64)> = Vec::with_capacity(pre.len());
                for w in pre {
                    if kept.iter().all(|&(v, _)| metric.dist(w, v) > eps) {
                        kept.push((w, phi.eval(map, w)? + s));
                    }
                }
                Ok(kept)
            })
            .collect::<Result<_, _>>()?;
        nodes = children.into_iter().flatten().collect();
        levels.push(SeparatedLevel {
            n,
            candidates: pool,
            sums: nodes.iter().map(|&(_, s)| s).collect(),
        });
    }
    Ok(levels)
}

fn greedy_levels(
    map: &RationalMap,
    phi: &Potential,
    ordered: &[Complex64],
    n_max: usize,
    metric: Metric,
    eps: f64,
) -> Result<Vec<SeparatedLevel>, SeparatedError> {
    // orbits[i][k] = f^k(z_i), prefix[i][k] = S_k phi(z_i)
    let orbits: Vec<(Vec<Complex64>, Vec<f64>)> = ordered
        .par_iter()
        .map(|&z| -> Result<_, SeparatedError> {
            let orbit = map.iterate(z, n_max)?.points;
            let mut prefix = Vec::with_capacity(n_max + 1);
            prefix.push(0.0);
            for &w in &orbit {
                prefix.push(prefix.last().copied().unwrap_or(0.0) + phi.eval(map, w)?);
            }
            Ok((orbit, prefix))
        })
        .collect::<Result<_, _>>()?;

    let cell = Grid::new(ordered, metric, eps).cell;
    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut grid = Grid {
            cell,
            buckets: HashMap::new(),
        };
        let mut chosen: Vec<usize> = Vec::new();
        for (i, (orbit, _)) in orbits.iter().enumerate() {
            let separated = grid.near(orbit[0]).all(|c| {
                let other = &orbits[chosen[c]].0;
                (0..n).any(|k| metric.dist(orbit[k], other[k]) > eps)
            });
            if separated {
                grid.insert(orbit[0], chosen.len());
                chosen.push(i);
            }
        }
        levels.push(SeparatedLevel {
            n,
            candidates: ordered.len(),
            sums: chosen.iter().map(|&i| orbits[i].1[n]).collect(),
        });
    }
    Ok(levels)
}
