//! Bowen's equation `P(-t log|f'|) = 0` by bisection on the finite-`n` pressure.

use crate::map::RationalMap;
use crate::periodic::{FilterParams, PeriodicEnumerator, SearchOptions};
use crate::potential::Potential;
use crate::pressure::{FilteredSums, PressureError};
use crate::sampler::{inverse_iteration_sample, SampleError};
use crate::separated::{SeparatedError, SeparatedOptions, SeparatedSets};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

pub const DEFAULT_TOL: f64 = 1e-3;
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BowenError {
    #[error("bracket ({0}, {1}) must satisfy t_lo < t_hi")]
    BadBracket(f64, f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("pressure has the same sign at both ends: P({t_lo}) = {p_lo}, P({t_hi}) = {p_hi}")]
    SameSignBracket { t_lo: f64, p_lo: f64, t_hi: f64, p_hi: f64 },
    #[error("Per_{n}(alpha, c) is empty; the pressure would come from the fallback")]
    Fallback { n: usize },
    #[error("no n in the range has a complete enumeration")]
    NoCompleteLevel,
    #[error("pressure is not decreasing: P({t_a}) = {p_a}, P({t_b}) = {p_b}")]
    NotDecreasing { t_a: f64, p_a: f64, t_b: f64, p_b: f64 },
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error(transparent)]
    Separated(#[from] SeparatedError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenOptions {
    pub bracket: (f64, f64),
    pub tol: f64,
    /// Separated-set settings for the cross-check root; `None` skips it.
    pub cross_check: Option<SeparatedOptions>,
    /// Tail window of the separated-set growth rate.
    pub window: usize,
}

impl BowenOptions {
    pub fn new(bracket: (f64, f64)) -> Self {
        Self {
            bracket,
            tol: DEFAULT_TOL,
            cross_check: None,
            window: crate::pressure::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub t: f64,
    pub pressure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenResult {
    /// Bowen root; a dimension estimate when the map is hyperbolic.
    pub t_star: f64,
    /// Final bracket, with `P(t_lo) > 0 > P(t_hi)`.
    pub bracket: (f64, f64),
    /// Pressure at `t_star`.
    pub residual: f64,
    pub n_used: usize,
    pub method_cross_check: Option<f64>,
    pub evaluations: Vec<Evaluation>,
    /// Largest secant slope magnitude between neighbouring evaluations.
    pub max_slope: f64,
    pub warnings: Vec<String>,
}

impl BowenResult {
    /// `(t_hi - t_lo) * max_slope`, a bound on `|residual|`.
    pub fn residual_bound(&self) -> f64 {
        (self.bracket.1 - self.bracket.0) * self.max_slope
    }
}

/// Bisection on a decreasing function, checking monotonicity along the way.
struct Bisection<'a> {
    eval: Box<dyn Fn(f64) -> f64 + 'a>,
    evaluations: Vec<Evaluation>,
}

impl<'a> Bisection<'a> {
    fn new(eval: impl Fn(f64) -> f64 + 'a) -> Self {
        Self {
            eval: Box::new(eval),
            evaluations: Vec::new(),
        }
    }

    fn at(&mut self, t: f64) -> Result<f64, BowenError> {
        let p = (self.eval)(t);
        let pos = self.evaluations.partition_point(|e| e.t < t);
        self.evaluations.insert(pos, Evaluation { t, pressure: p });
        let lo = pos.saturating_sub(1);
        let hi = (pos + 2).min(self.evaluations.len());
        for w in self.evaluations[lo..hi].windows(2) {
            if !(w[0].pressure > w[1].pressure - MONOTONE_TOL) {
                return Err(BowenError::NotDecreasing {
                    t_a: w[0].t,
                    p_a: w[0].pressure,
                    t_b: w[1].t,
                    p_b: w[1].pressure,
                });
            }
        }
        Ok(p)
    }

    fn solve(&mut self, bracket: (f64, f64), tol: f64) -> Result<(f64, (f64, f64)), BowenError> {
        let (mut lo, mut hi) = bracket;
        let p_lo = self.at(lo)?;
        let p_hi = self.at(hi)?;
        if !(p_lo > 0.0 && p_hi < 0.0) {
            return Err(BowenError::SameSignBracket {
                t_lo: lo,
                p_lo,
                t_hi: hi,
                p_hi,
            });
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.at(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi), (lo, hi)))
    }

    fn max_slope(&self) -> f64 {
        self.evaluations
            .windows(2)
            .map(|w| ((w[1].pressure - w[0].pressure) / (w[1].t - w[0].t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Largest `n` in the range whose enumeration is complete.
fn complete_level(enumerator: &mut PeriodicEnumerator, n_range: RangeInclusive<usize>) -> Result<usize, BowenError> {
    for n in n_range.rev() {
        if enumerator.find(n).map_err(PressureError::from)?.report.complete {
            return Ok(n);
        }
    }
    Err(BowenError::NoCompleteLevel)
}

pub fn bowen_root(
    enumerator: &mut PeriodicEnumerator,
    params: &FilterParams,
    n_range: RangeInclusive<usize>,
    opts: &BowenOptions,
) -> Result<BowenResult, BowenError> {
    let (t_lo, t_hi) = opts.bracket;
    if !(t_lo < t_hi) {
        return Err(BowenError::BadBracket(t_lo, t_hi));
    }
    if !(opts.tol > 0.0) {
        return Err(BowenError::BadTolerance(opts.tol));
    }
    let n = complete_level(enumerator, n_range)?;
    // S_n(-t log|f'|) = t S_n(-log|f'|), so one pass over the filtered set serves every t.
    let base = Potential::NegTLogAbsDeriv(1.0);
    let sums = FilteredSums::compute(enumerator, &base, params, n)?;
    if sums.sums.is_empty() {
        return Err(BowenError::Fallback { n });
    }
    let mut bisection = Bisection::new(|t| sums.log_sum(t) / n as f64);
    let (t_star, bracket) = bisection.solve(opts.bracket, opts.tol)?;
    let residual = bisection.at(t_star)?;
    let max_slope = bisection.max_slope();
    let evaluations = bisection.evaluations;

    let mut warnings = Vec::new();
    let method_cross_check = match &opts.cross_check {
        Some(sep) => {
            let sets = SeparatedSets::build(enumerator.map(), &base, enumerator.sample(), n, sep)?;
            if sets.lower_bound {
                warnings.push("separated-set sample is sparse; cross-check root is biased low".to_string());
            }
            let mut b = Bisection::new(|t| sets.tail_rate(n, opts.window, t));
            match b.solve(opts.bracket, opts.tol) {
                Ok((root, _)) => Some(root),
                Err(e) => {
                    warnings.push(format!("separated-set cross-check failed: {e}"));
                    None
                }
            }
        }
        None => None,
    };
    Ok(BowenResult {
        t_star,
        bracket,
        residual,
        n_used: n,
        method_cross_check,
        evaluations,
        max_slope,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub sample_count: usize,
    pub sample_depth: usize,
    pub seed: u64,
    pub search: SearchOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub c_re: f64,
    pub c_im: f64,
    pub t_star: f64,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub entries: Vec<SweepEntry>,
    /// Largest `|t*(c) - t*(c')| / |c - c'|` over neighbouring parameters.
    pub lipschitz: Option<f64>,
}

/// Bowen roots across the quadratic family `z^2 + c`.
pub fn bowen_sweep(
    cs: &[Complex64],
    settings: &SweepSettings,
    params: &FilterParams,
    n_range: RangeInclusive<usize>,
    opts: &BowenOptions,
) -> Result<Sweep, BowenError> {
    let mut entries = Vec::with_capacity(cs.len());
    for &c in cs {
        let map = RationalMap::quadratic(c);
        let sample = inverse_iteration_sample(&map, settings.sample_count, settings.sample_depth, settings.seed)?;
        let mut e = PeriodicEnumerator::new(map, sample, settings.search);
        let r = bowen_root(&mut e, params, n_range.clone(), opts)?;
        entries.push(SweepEntry {
            c_re: c.re,
            c_im: c.im,
            t_star: r.t_star,
            n_used: r.n_used,
        });
    }
    let lipschitz = entries
        .windows(2)
        .map(|w| {
            let dc = Complex64::new(w[1].c_re - w[0].c_re, w[1].c_im - w[0].c_im).norm();
            (w[1].t_star - w[0].t_star).abs() / dc
        })
        .reduce(f64::max);
    Ok(Sweep { entries, lipschitz })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerator(map: RationalMap) -> PeriodicEnumerator {
        let s = inverse_iteration_sample(&map, 4000, 64, 7).unwrap();
        PeriodicEnumerator::new(map, s, SearchOptions::default())
    }

    fn params() -> FilterParams {
        FilterParams::new(0.2, 0.5).unwrap()
    }

    #[test]
    fn circle_root_is_one() {
        let mut e = enumerator(RationalMap::power(2).unwrap());
        let r = bowen_root(&mut e, &params(), 1..=12, &BowenOptions::new((0.5, 1.5))).unwrap();
        assert!((r.t_star - 1.0).abs() < 0.02);
        assert_eq!(r.n_used, 12);
        assert!(r.bracket.0 <= r.t_star && r.t_star <= r.bracket.1);
        assert!(r.bracket.1 - r.bracket.0 <= DEFAULT_TOL);
        assert!(r.residual.abs() <= r.residual_bound());
        // slope of (1/n) ln((2^n - 1) 2^{-tn}) is -ln 2
        assert!((r.max_slope - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn evaluations_decrease() {
        let mut e = enumerator(RationalMap::quadratic(Complex64::new(-1.0, 0.0)));
        let r = bowen_root(&mut e, &params(), 1..=9, &BowenOptions::new((0.8, 1.6))).unwrap();
        for w in r.evaluations.windows(2) {
            assert!(w[0].t < w[1].t);
            assert!(w[0].pressure > w[1].pressure - MONOTONE_TOL);
        }
        assert!(r.t_star > 1.0 && r.t_star < 1.5);
    }

    #[test]
    fn same_sign_rejected() {
        let mut e = enumerator(RationalMap::power(2).unwrap());
        let err = bowen_root(&mut e, &params(), 1..=6, &BowenOptions::new((1.2, 2.0))).unwrap_err();
        assert!(matches!(err, BowenError::SameSignBracket { .. }));
        let err = bowen_root(&mut e, &params(), 1..=6, &BowenOptions::new((2.0, 1.0))).unwrap_err();
        assert!(matches!(err, BowenError::BadBracket(..)));
    }

    #[test]
    fn empty_filter_aborts() {
        let mut e = enumerator(RationalMap::power(2).unwrap());
        let strict = FilterParams::new(0.8, 1.0).unwrap();
        let err = bowen_root(&mut e, &strict, 1..=6, &BowenOptions::new((0.5, 1.5))).unwrap_err();
        assert_eq!(err, BowenError::Fallback { n: 6 });
    }

    #[test]
    fn decreasing_check_fires() {
        let mut b = Bisection::new(|t| t - 1.0);
        assert!(matches!(b.solve((0.0, 2.0), 1e-3), Err(BowenError::NotDecreasing { .. })));
    }

    #[test]
    fn sweep_reports_lipschitz() {
        let cs: Vec<Complex64> = [-0.1, 0.0, 0.1].iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let settings = SweepSettings {
            sample_count: 2000,
            sample_depth: 64,
            seed: 3,
            search: SearchOptions::default(),
        };
        let sweep = bowen_sweep(&cs, &settings, &params(), 1..=8, &BowenOptions::new((0.5, 1.6))).unwrap();
        assert_eq!(sweep.entries.len(), 3);
        assert!(sweep.lipschitz.unwrap().is_finite());
        assert!((sweep.entries[1].t_star - 1.0).abs() < 0.02);
    }
}
