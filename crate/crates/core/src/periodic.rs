//! Fixed points of `f^n`, their multipliers, and the `Per_n(alpha, c)` filter.
//!
//! Enumeration runs damped Newton on `g(z) = f^n(z) - z`, with `g` and `g'`
//! evaluated by forward iteration and the chain rule. Seeds come from the Julia
//! sample, a ring of `d^n + 1` points around the Julia set, the points already
//! found for every proper divisor of `n`, and the leaves of the preimage tree
//! `f^{-n}(b)` of a few base points. Each leaf sits next to exactly one
//! repelling orbit point of a hyperbolic map, which is what makes the count
//! reach `d^n`. Seeds that land on an already found root are retried once with
//! implicit deflation against the roots found so far.

use crate::map::{chordal, MapError, RationalMap};
use crate::sampler::{repelling_fixed_point, JuliaSample, SampleError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PeriodicError {
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("period {n} needs {expected} fixed points, over the budget of {budget}")]
    OverBudget { n: usize, expected: usize, budget: usize },
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("c must lie in (0, 1], got {0}")]
    COutOfRange(f64),
    #[error("brute-force horizon K = {k} is shorter than the period {n}")]
    HorizonTooShort { k: usize, n: usize },
    #[error("deduplication produced {found} points, more than the {expected} possible")]
    Overcount { found: usize, expected: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Parameters of `Per_n(alpha, c)`: `|(f^k)'(f^i z)| >= c e^{k alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    alpha: f64,
    c: f64,
}

impl FilterParams {
    pub fn new(alpha: f64, c: f64) -> Result<Self, PeriodicError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PeriodicError::NonPositiveAlpha(alpha));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(PeriodicError::COutOfRange(c));
        }
        Ok(Self { alpha, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Repelling,
    NonRepelling,
    /// `|lambda|` within the classification margin of 1.
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub z: Complex64,
    /// The `n` of `f^n(z) = z`; not necessarily the primitive period.
    pub period: usize,
    pub primitive_period: usize,
    pub multiplier: Complex64,
    pub log_abs_multiplier: f64,
    pub residual: f64,
}

pub const CLASSIFICATION_MARGIN: f64 = 1e-6;

impl PeriodicPoint {
    /// Builds the record for a root of `f^n(z) = z`.
    pub fn from_root(map: &RationalMap, z: Complex64, n: usize) -> Result<Self, MapError> {
        let mut orbit = Vec::with_capacity(n + 1);
        let mut w = z;
        orbit.push(w);
        for step in 0..n {
            w = map.step(w, step + 1)?;
            orbit.push(w);
        }
        let primitive_period = (1..=n)
            .filter(|m| n.is_multiple_of(*m))
            .find(|&m| chordal(orbit[m], z) <= 1e-7)
            .unwrap_or(n);
        let multiplier = map.orbit_derivative(z, n)?;
        Ok(Self {
            z,
            period: n,
            primitive_period,
            multiplier: multiplier.to_complex(),
            log_abs_multiplier: multiplier.ln_abs(),
            residual: (orbit[n] - z).norm(),
        })
    }

    pub fn classify(&self) -> Stability {
        self.classify_with_margin(CLASSIFICATION_MARGIN)
    }

    pub fn classify_with_margin(&self, margin: f64) -> Stability {
        let modulus = self.log_abs_multiplier.exp();
        if (modulus - 1.0).abs() <= margin {
            Stability::Ambiguous
        } else if modulus > 1.0 {
            Stability::Repelling
        } else {
            Stability::NonRepelling
        }
    }

    /// `|lambda| > 1 + margin`.
    pub fn is_repelling(&self) -> bool {
        self.classify() == Stability::Repelling
    }

    /// Pointwise Lyapunov exponent `(1/n) log |lambda|` of the orbit.
    pub fn lyapunov(&self) -> f64 {
        self.log_abs_multiplier / self.period as f64
    }

    /// `(z, f z, ..., f^{n-1} z)`.
    pub fn orbit(&self, map: &RationalMap) -> Result<Vec<Complex64>, MapError> {
        let mut out = Vec::with_capacity(self.period);
        let mut w = self.z;
        for step in 0..self.period {
            if step > 0 {
                w = map.step(w, step)?;
            }
            out.push(w);
        }
        Ok(out)
    }

    /// `log |f'|` at each orbit point.
    pub fn log_derivatives(&self, map: &RationalMap) -> Result<Vec<f64>, MapError> {
        self.orbit(map)?
            .into_iter()
            .map(|w| map.log_abs_deriv(w))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub n: usize,
    pub found: usize,
    pub expected: usize,
    pub complete: bool,
    pub unresolved_multiplicity: usize,
}

impl EnumerationReport {
    pub fn new(n: usize, found: usize, expected: usize) -> Self {
        Self {
            n,
            found,
            expected,
            complete: found == expected,
            unresolved_multiplicity: expected.saturating_sub(found),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSet {
    pub points: Vec<PeriodicPoint>,
    pub report: EnumerationReport,
}

impl PeriodicSet {
    pub fn count_by_stability(&self) -> (usize, usize, usize) {
        self.points.iter().fold((0, 0, 0), |(r, a, n), p| match p.classify() {
            Stability::Repelling => (r + 1, a, n),
            Stability::Ambiguous => (r, a + 1, n),
            Stability::NonRepelling => (r, a, n + 1),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_newton_iter: usize,
    pub max_halvings: usize,
    /// Convergence: `|g(z)| <= residual_tol (1 + |z|)`.
    pub residual_tol: f64,
    /// Chordal distance below which two roots are merged.
    pub dedup_tol: f64,
    /// Hard cap on the period.
    pub n_max: usize,
    /// Largest admissible `d^n`; with the default `n_max` this only binds for `d >= 3`.
    pub max_points: usize,
    /// Number of base points whose `n`-th preimage trees seed the search.
    pub preimage_bases: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_newton_iter: 200,
            max_halvings: 30,
            residual_tol: 1e-10,
            dedup_tol: 1e-8,
            n_max: 14,
            max_points: 1 << 20,
            preimage_bases: 4,
        }
    }
}

impl SearchOptions {
    /// Largest admissible period for a map of the given degree.
    pub fn n_max(&self, degree: usize) -> usize {
        self.points_limited_n(degree).min(self.n_max)
    }

    fn points_limited_n(&self, degree: usize) -> usize {
        let mut n = 0;
        let mut count = 1usize;
        while let Some(next) = count.checked_mul(degree) {
            if next > self.max_points {
                break;
            }
            count = next;
            n += 1;
        }
        n
    }
}

/// Enumerates and memoizes fixed points of `f^n` for one map and sample.
#[derive(Debug, Clone)]
pub struct PeriodicEnumerator {
    map: RationalMap,
    sample: JuliaSample,
    options: SearchOptions,
    sets: BTreeMap<usize, PeriodicSet>,
}

impl PeriodicEnumerator {
    pub fn new(map: RationalMap, sample: JuliaSample, options: SearchOptions) -> Self {
        Self {
            map,
            sample,
            options,
            sets: BTreeMap::new(),
        }
    }

    pub fn map(&self) -> &RationalMap {
        &self.map
    }

    pub fn sample(&self) -> &JuliaSample {
        &self.sample
    }

    pub fn options(&self) -> &SearchOptions {
        &self.options
    }

    /// Registers a set loaded from elsewhere (e.g. the on-disk cache).
    pub fn insert(&mut self, set: PeriodicSet) {
        self.sets.insert(set.report.n, set);
    }

    pub fn cached(&self, n: usize) -> Option<&PeriodicSet> {
        self.sets.get(&n)
    }

    pub fn find(&mut self, n: usize) -> Result<&PeriodicSet, PeriodicError> {
        if n == 0 {
            return Err(PeriodicError::ZeroPeriod);
        }
        if !self.sets.contains_key(&n) {
            let mut divisor_points = Vec::new();
            for m in (1..n).filter(|m| n.is_multiple_of(*m)) {
                divisor_points.extend(self.find(m)?.points.iter().map(|p| p.z));
            }
            let set = enumerate(&self.map, n, &self.sample, &divisor_points, &self.options)?;
            self.sets.insert(n, set);
        }
        Ok(&self.sets[&n])
    }
}

/// One-shot enumeration of the fixed points of `f^n` (divisor periods are
/// enumerated first and used as seeds).
pub fn find_periodic(
    map: &RationalMap,
    n: usize,
    sample: &JuliaSample,
    options: &SearchOptions,
) -> Result<PeriodicSet, PeriodicError> {
    let mut e = PeriodicEnumerator::new(map.clone(), sample.clone(), *options);
    e.find(n).cloned()
}

fn enumerate(
    map: &RationalMap,
    n: usize,
    sample: &JuliaSample,
    divisor_points: &[Complex64],
    opts: &SearchOptions,
) -> Result<PeriodicSet, PeriodicError> {
    let expected = map.expected_fixed_points(n);
    if n > opts.n_max(map.degree()) {
        return Err(PeriodicError::OverBudget {
            n,
            expected,
            budget: opts.max_points,
        });
    }
    let newton_all = |seeds: &[Complex64], known: &[Complex64]| -> Vec<Option<Complex64>> {
        seeds.par_iter().map(|&s| newton(map, n, s, opts, known)).collect()
    };
    let mut found: Vec<Complex64> = Vec::new();
    let absorb = |found: &mut Vec<Complex64>, roots: &[Option<Complex64>]| {
        let mut merged = std::mem::take(found);
        merged.extend(roots.iter().flatten());
        *found = dedup(merged, opts.dedup_tol);
    };

    // Stage 1: divisor periods, the preimage tree of the repelling fixed point,
    // and the Julia sample.
    let bases = preimage_bases(map, sample, opts);
    let mut seeds: Vec<Complex64> = divisor_points.to_vec();
    if let Some(first) = bases.first() {
        seeds.extend(preimage_leaves(map, *first, n)?);
    }
    seeds.extend_from_slice(&sample.points);
    let mut roots = newton_all(&seeds, &[]);
    absorb(&mut found, &roots);

    // Stage 2: further preimage trees.
    if found.len() < expected && bases.len() > 1 {
        for &b in &bases[1..] {
            if found.len() >= expected {
                break;
            }
            let more = preimage_leaves(map, b, n)?;
            let r = newton_all(&more, &[]);
            absorb(&mut found, &r);
            seeds.extend(more);
            roots.extend(r);
        }
    }

    // Stage 3: a ring of d^n + 1 points around the Julia set.
    if found.len() < expected {
        let radius = ring_radius(map, sample);
        let count = expected + 1;
        let ring: Vec<Complex64> = (0..count)
            .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.5) / count as f64))
            .collect();
        let r = newton_all(&ring, &[]);
        absorb(&mut found, &r);
        seeds.extend(ring);
        roots.extend(r);
    }

    // Stage 4: seeds whose root was claimed twice (or that failed) are retried
    // with the known roots deflated away.
    if found.len() < expected && expected <= DEFLATION_LIMIT {
        let mut claimed = vec![false; found.len()];
        let mut retry = Vec::new();
        for (seed, root) in seeds.iter().zip(&roots) {
            match root {
                Some(r) => {
                    let idx = nearest(&found, *r);
                    if claimed[idx] {
                        retry.push(*seed);
                    }
                    claimed[idx] = true;
                }
                None => retry.push(*seed),
            }
        }
        retry.truncate(4 * expected);
        let r = newton_all(&retry, &found);
        absorb(&mut found, &r);
    }

    if found.len() > expected {
        return Err(PeriodicError::Overcount {
            found: found.len(),
            expected,
        });
    }
    let points = found
        .par_iter()
        .map(|&z| PeriodicPoint::from_root(map, z, n))
        .collect::<Result<Vec<_>, _>>()?;
    let report = EnumerationReport::new(n, points.len(), expected);
    Ok(PeriodicSet { points, report })
}

/// Deflated Newton costs O(found) per step; beyond this many roots it is skipped.
const DEFLATION_LIMIT: usize = 1 << 14;

fn ring_radius(map: &RationalMap, sample: &JuliaSample) -> f64 {
    let sample_max = sample.points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    map.escape_radius().unwrap_or(2.0).max(1.1 * sample_max)
}

/// The repelling fixed point followed by evenly spaced sample points.
fn preimage_bases(map: &RationalMap, sample: &JuliaSample, opts: &SearchOptions) -> Vec<Complex64> {
    let mut bases = Vec::new();
    if let Ok(b) = repelling_fixed_point(map) {
        bases.push(b);
    }
    let extra = opts.preimage_bases.saturating_sub(bases.len());
    if !sample.points.is_empty() && extra > 0 {
        let stride = (sample.points.len() / extra).max(1);
        bases.extend(sample.points.iter().step_by(stride).take(extra));
    }
    bases
}

/// Leaves of the depth-`n` preimage tree of `base`.
fn preimage_leaves(map: &RationalMap, base: Complex64, n: usize) -> Result<Vec<Complex64>, MapError> {
    let mut level = vec![base];
    for _ in 0..n {
        let next: Vec<Vec<Complex64>> = level
            .par_iter()
            .map(|&w| map.preimages(w))
            .collect::<Result<_, _>>()?;
        level = next.into_iter().flatten().collect();
    }
    Ok(level)
}

/// Damped Newton on `f^n(z) - z`, optionally deflated by `known` roots.
fn newton(
    map: &RationalMap,
    n: usize,
    seed: Complex64,
    opts: &SearchOptions,
    known: &[Complex64],
) -> Option<Complex64> {
    // ln |g(z)| - sum ln |z - r| and the Newton correction of the deflated function
    let eval = |z: Complex64| -> Option<(f64, Complex64, Complex64)> {
        let (fz, d) = map.iterate_with_derivative(z, n)?;
        let g = fz - z;
        let gp = d - 1.0;
        if known.is_empty() {
            return Some((g.norm().ln(), g, g / gp));
        }
        let mut log_mag = g.norm().ln();
        let mut pole_sum = Complex64::new(0.0, 0.0);
        for &r in known {
            let diff = z - r;
            if diff.norm() == 0.0 {
                return None;
            }
            log_mag -= diff.norm().ln();
            pole_sum += diff.inv();
        }
        let step = (gp / g - pole_sum).inv();
        Some((log_mag, g, step))
    };

    let mut z = seed;
    let (mut merit, mut g, mut step) = eval(z)?;
    for _ in 0..opts.max_newton_iter {
        if converged(z, g, step, opts) {
            return Some(polish(map, n, z));
        }
        if !step.is_finite() {
            return None;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand = z - step * scale;
            if let Some((m, gc, sc)) = eval(cand) {
                if m < merit {
                    z = cand;
                    merit = m;
                    g = gc;
                    step = sc;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            return converged_loose(z, g, map, n).then(|| polish(map, n, z));
        }
    }
    None
}

fn converged(z: Complex64, g: Complex64, step: Complex64, opts: &SearchOptions) -> bool {
    let scale = 1.0 + z.norm();
    g.norm() <= opts.residual_tol * scale || (step.norm() <= 1e-14 * scale && g.norm() <= 1e-6 * scale)
}

/// Accepts a stalled iterate when the plain Newton correction is already at
/// rounding level: strongly expanding orbits cannot push `|g|` below
/// `eps |lambda|`.
fn converged_loose(z: Complex64, g: Complex64, map: &RationalMap, n: usize) -> bool {
    let Some((_, d)) = map.iterate_with_derivative(z, n) else {
        return false;
    };
    let scale = 1.0 + z.norm();
    (g / (d - 1.0)).norm() <= 1e-13 * scale && g.norm() <= 1e-6 * scale
}

/// A few undamped Newton steps, kept while the residual drops.
fn polish(map: &RationalMap, n: usize, mut z: Complex64) -> Complex64 {
    let Some((fz, d)) = map.iterate_with_derivative(z, n) else {
        return z;
    };
    let mut g = fz - z;
    let mut gp = d - 1.0;
    for _ in 0..3 {
        let cand = z - g / gp;
        match map.iterate_with_derivative(cand, n) {
            Some((fc, dc)) if (fc - cand).norm() < g.norm() => {
                z = cand;
                g = fc - cand;
                gp = dc - 1.0;
            }
            _ => break,
        }
    }
    z
}

fn nearest(points: &[Complex64], z: Complex64) -> usize {
    points
        .iter()
        .enumerate()
        .min_by(|a, b| chordal(*a.1, z).total_cmp(&chordal(*b.1, z)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Merges points closer than `tol` in the chordal metric, keeping the first of
/// each cluster in (re, im) order. Deterministic in the input multiset.
pub(crate) fn dedup(mut points: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut kept: Vec<Complex64> = Vec::with_capacity(points.len());
    // chordal <= tol implies |dz| <= tol (1 + |z|^2), so a window on re suffices
    let max_sq = points.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let reach = tol * (1.0 + max_sq) * 2.0;
    let mut window_start = 0;
    for z in points {
        while window_start < kept.len() && kept[window_start].re < z.re - reach {
            window_start += 1;
        }
        if !kept[window_start..].iter().any(|&w| chordal(w, z) <= tol) {
            kept.push(z);
        }
    }
    kept
}

/// Whether `(f^k)'` clears `c e^{k alpha}` for every `k` and orbit position,
/// decided from finitely many `k`: writing `k = q n + r`,
/// `|(f^k)'(f^i z)| = |lambda|^q |(f^r)'(f^i z)|`, so the condition holds iff
/// `|lambda| >= e^{n alpha}` and the `r < n` cases hold.
pub fn passes_filter(p: &PeriodicPoint, map: &RationalMap, params: &FilterParams) -> Result<bool, MapError> {
    let n = p.period;
    let (alpha, log_c) = (params.alpha(), params.c().ln());
    let logd = p.log_derivatives(map)?;
    let log_lambda: f64 = logd.iter().sum();
    if !(log_lambda >= n as f64 * alpha) {
        return Ok(false);
    }
    for i in 0..n {
        let mut acc = 0.0;
        for r in 1..n {
            acc += logd[(i + r - 1) % n];
            if !(acc >= log_c + r as f64 * alpha) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `Per_n(alpha, c)` restricted to the given fixed points of `f^n`.
pub fn filter_per_alpha_c(
    points: &[PeriodicPoint],
    map: &RationalMap,
    params: &FilterParams,
) -> Result<Vec<PeriodicPoint>, MapError> {
    let keep = points
        .par_iter()
        .map(|p| passes_filter(p, map, params))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect())
}

/// Direct check of `|(f^k)'(f^i z)| >= c e^{k alpha}` for `1 <= k <= K` and all
/// orbit positions, accumulating `log |f'|` along the periodic orbit.
pub fn brute_force_membership(
    p: &PeriodicPoint,
    map: &RationalMap,
    params: &FilterParams,
    horizon: usize,
) -> Result<bool, PeriodicError> {
    let n = p.period;
    if horizon < n {
        return Err(PeriodicError::HorizonTooShort { k: horizon, n });
    }
    let logd = p.log_derivatives(map)?;
    let (alpha, log_c) = (params.alpha(), params.c().ln());
    for i in 0..n {
        let mut acc = 0.0;
        for k in 1..=horizon {
            acc += logd[(i + k - 1) % n];
            if !(acc >= log_c + k as f64 * alpha) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
