//! Periodic-point pressure, separated-set pressure and periodic-orbit measures.

use crate::map::{MapError, RationalMap};
use crate::numerics::{log_sum_exp, log_sum_exp_scaled, ls_slope};
use crate::periodic::{filter_per_alpha_c, EnumerationReport, FilterParams, PeriodicEnumerator, PeriodicError, PeriodicPoint};
use crate::potential::{Potential, PotentialError};
use crate::sampler::{min_potential, SampleError, SampledMinimum};
use crate::separated::{SeparatedError, SeparatedSets};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_STABILIZATION_TOL: f64 = 1e-3;
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PressureError {
    #[error("n range is empty")]
    EmptyRange,
    #[error("n range must start at 1 or above")]
    ZeroInRange,
    #[error("tail window must be at least 1")]
    ZeroWindow,
    #[error("c_schedule must be descending, strictly and within (0, 1]: {0}")]
    BadSchedule(String),
    #[error("pressure decreased from {previous} at c = {c_previous} to {next} at c = {c_next}; enumeration is likely incomplete")]
    NonMonotone {
        c_previous: f64,
        c_next: f64,
        previous: f64,
        next: f64,
    },
    #[error("orbit measure needs a nonempty filtered set")]
    EmptyMeasure,
    #[error("orbit measure points must share one period, found {0} and {1}")]
    MixedPeriods(usize, usize),
    #[error("zero multiplier at {z} in the measure support")]
    ZeroMultiplier { z: Complex64 },
    #[error("evaluation failed at {z}: {source}")]
    AtPoint {
        z: Complex64,
        #[source]
        source: PotentialError,
    },
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Separated(#[from] SeparatedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PeriodicPoint,
    SeparatedSet,
}

/// Birkhoff sums `S_n phi` over `Per_n(alpha, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSums {
    pub n: usize,
    pub sums: Vec<f64>,
    pub count_total: usize,
    pub report: EnumerationReport,
}

impl FilteredSums {
    pub fn compute(
        enumerator: &mut PeriodicEnumerator,
        phi: &Potential,
        params: &FilterParams,
        n: usize,
    ) -> Result<Self, PressureError> {
        let map = enumerator.map().clone();
        let set = enumerator.find(n)?;
        let filtered = filter_per_alpha_c(&set.points, &map, params)?;
        let sums = filtered
            .par_iter()
            .map(|p| {
                phi.birkhoff_sum(&map, p.z, n)
                    .map_err(|source| PressureError::AtPoint { z: p.z, source })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(Self {
            n,
            sums,
            count_total: set.points.len(),
            report: set.report,
        })
    }

    /// `ln sum exp(s S_n phi)`; `-inf` when the filtered set is empty.
    pub fn log_sum(&self, s: f64) -> f64 {
        log_sum_exp_scaled(&self.sums, s)
    }
}

/// `ln Q_P(phi, alpha, c, n)` with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpValue {
    pub n: usize,
    pub log_q: f64,
    pub count_filtered: usize,
    pub count_total: usize,
    /// The filtered set was empty and `n * min phi` over the sample was used.
    pub fallback_used: bool,
    pub fallback_minimum: Option<SampledMinimum>,
    pub report: EnumerationReport,
}

pub fn log_q_p(
    enumerator: &mut PeriodicEnumerator,
    phi: &Potential,
    params: &FilterParams,
    n: usize,
) -> Result<QpValue, PressureError> {
    let sums = FilteredSums::compute(enumerator, phi, params, n)?;
    let (log_q, fallback_minimum) = if sums.sums.is_empty() {
        let m = min_potential(enumerator.sample(), enumerator.map(), phi)?;
        (n as f64 * m.value, Some(m))
    } else {
        (sums.log_sum(1.0), None)
    };
    Ok(QpValue {
        n,
        log_q,
        count_filtered: sums.sums.len(),
        count_total: sums.count_total,
        fallback_used: fallback_minimum.is_some(),
        fallback_minimum,
        report: sums.report,
    })
}

/// `Q_P(phi, alpha, c, n)`; may overflow for large `n`, where [`log_q_p`] is preferred.
pub fn q_p(enumerator: &mut PeriodicEnumerator, phi: &Potential, params: &FilterParams, n: usize) -> Result<f64, PressureError> {
    Ok(log_q_p(enumerator, phi, params, n)?.log_q.exp())
}

/// One row of a pressure series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub n: usize,
    /// Filtered periodic points, or the size of the separated set.
    pub count_filtered: usize,
    /// All fixed points of `f^n`, or the size of the candidate pool.
    pub count_total: usize,
    /// `ln Q_P`, or `ln` of the separated partition sum.
    pub log_sum: f64,
    pub value_n: f64,
    /// `(1/n) ln Sigma_n`; equals `value_n` for the periodic-point method.
    pub raw_n: f64,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CValue {
    pub c: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub reports: Vec<EnumerationReport>,
    pub fallbacks_used: usize,
    pub fallback_minimum: Option<SampledMinimum>,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub c_series: Vec<CValue>,
    /// Least-squares slope of `ln Q_P` against `n`.
    pub slope: Option<f64>,
    pub sample_size: usize,
    pub incomplete: bool,
    /// The separated-set sample failed the density check.
    pub lower_bound: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub series: Vec<SeriesEntry>,
    pub method: Method,
    pub window: usize,
    pub diagnostics: Diagnostics,
}

impl PressureEstimate {
    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.series.iter().find(|e| e.n == n).map(|e| e.value_n)
    }
}

fn check_range(n_range: &RangeInclusive<usize>, window: usize) -> Result<(), PressureError> {
    if n_range.is_empty() {
        return Err(PressureError::EmptyRange);
    }
    if *n_range.start() == 0 {
        return Err(PressureError::ZeroInRange);
    }
    if window == 0 {
        return Err(PressureError::ZeroWindow);
    }
    Ok(())
}

/// `P_P(phi, alpha, c)`: the series `(1/n) ln Q_P` and its maximum over the
/// last `window` entries as the limsup proxy.
pub fn p_p(
    enumerator: &mut PeriodicEnumerator,
    phi: &Potential,
    params: &FilterParams,
    n_range: RangeInclusive<usize>,
    window: usize,
) -> Result<PressureEstimate, PressureError> {
    check_range(&n_range, window)?;
    let mut series = Vec::new();
    let mut diagnostics = Diagnostics {
        alpha: Some(params.alpha()),
        c: Some(params.c()),
        sample_size: enumerator.sample().len(),
        ..Diagnostics::default()
    };
    for n in n_range {
        let q = log_q_p(enumerator, phi, params, n)?;
        if q.fallback_used {
            diagnostics.fallbacks_used += 1;
            diagnostics.fallback_minimum = q.fallback_minimum;
            diagnostics
                .warnings
                .push(format!("Per_{n}(alpha, c) is empty; used n * min phi over the sample"));
        }
        if !q.report.complete {
            diagnostics.incomplete = true;
            diagnostics.warnings.push(format!(
                "enumeration incomplete at n = {n}: found {} of {}",
                q.report.found, q.report.expected
            ));
        }
        diagnostics.reports.push(q.report);
        let value_n = q.log_q / n as f64;
        series.push(SeriesEntry {
            n,
            count_filtered: q.count_filtered,
            count_total: q.count_total,
            log_sum: q.log_q,
            value_n,
            raw_n: value_n,
            fallback_used: q.fallback_used,
        });
    }
    let xs: Vec<f64> = series.iter().map(|e| e.n as f64).collect();
    let ys: Vec<f64> = series.iter().map(|e| e.log_sum).collect();
    diagnostics.slope = ls_slope(&xs, &ys);
    let value = tail_max(&series, window);
    Ok(PressureEstimate {
        value,
        series,
        method: Method::PeriodicPoint,
        window,
        diagnostics,
    })
}

fn tail_max(series: &[SeriesEntry], window: usize) -> f64 {
    series[series.len().saturating_sub(window)..]
        .iter()
        .map(|e| e.value_n)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_c_schedule(c_schedule: &[f64]) -> Result<(), PressureError> {
    if c_schedule.is_empty() {
        return Err(PressureError::BadSchedule("schedule is empty".into()));
    }
    if let Some(c) = c_schedule.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
        return Err(PressureError::BadSchedule(format!("{c} is outside (0, 1]")));
    }
    if let Some(w) = c_schedule.windows(2).find(|w| w[1] >= w[0]) {
        return Err(PressureError::BadSchedule(format!("{} is followed by {}", w[0], w[1])));
    }
    Ok(())
}

/// The outer limit `c -> 0`: `p_p` along a descending schedule, stopping once two
/// consecutive values agree within `stabilization_tol`.
pub fn p_p_c_limit(
    enumerator: &mut PeriodicEnumerator,
    phi: &Potential,
    alpha: f64,
    c_schedule: &[f64],
    n_range: RangeInclusive<usize>,
    window: usize,
    stabilization_tol: f64,
) -> Result<PressureEstimate, PressureError> {
    check_c_schedule(c_schedule)?;
    let mut c_series: Vec<CValue> = Vec::new();
    let mut last: Option<PressureEstimate> = None;
    for &c in c_schedule {
        let params = FilterParams::new(alpha, c)?;
        let est = p_p(enumerator, phi, &params, n_range.clone(), window)?;
        if let Some(prev) = c_series.last() {
            if est.value < prev.value - MONOTONE_TOL {
                return Err(PressureError::NonMonotone {
                    c_previous: prev.c,
                    c_next: c,
                    previous: prev.value,
                    next: est.value,
                });
            }
        }
        let stable = c_series
            .last()
            .is_some_and(|prev| (est.value - prev.value).abs() < stabilization_tol);
        c_series.push(CValue { c, value: est.value });
        last = Some(est);
        if stable {
            break;
        }
    }
    let mut est = last.ok_or_else(|| PressureError::BadSchedule("schedule is empty".into()))?;
    est.diagnostics.c_series = c_series;
    Ok(est)
}

/// Separated-set series for the potential `s * phi`, where `phi` is the
/// potential the sets were built with. `value_n` is the one-step growth rate;
/// the estimate is the mean rate over the last `window` levels.
pub fn separated_series(sets: &SeparatedSets, s: f64, window: usize) -> Result<PressureEstimate, PressureError> {
    check_range(&(1..=sets.n_max()), window)?;
    let series: Vec<SeriesEntry> = sets
        .levels
        .iter()
        .map(|level| SeriesEntry {
            n: level.n,
            count_filtered: level.size(),
            count_total: level.candidates,
            log_sum: sets.log_sum(level.n, s),
            value_n: sets.rate(level.n, s),
            raw_n: sets.raw(level.n, s),
            fallback_used: false,
        })
        .collect();
    let mut diagnostics = Diagnostics {
        epsilon: Some(sets.epsilon),
        lower_bound: sets.lower_bound,
        ..Diagnostics::default()
    };
    if sets.lower_bound {
        diagnostics.warnings.push(format!(
            "sample is sparse at eps = {} ({:.1}% of points lack a neighbour within eps/4); estimate is a lower bound",
            sets.epsilon,
            100.0 * sets.sparse_fraction
        ));
    }
    Ok(PressureEstimate {
        value: sets.tail_rate(sets.n_max(), window, s),
        series,
        method: Method::SeparatedSet,
        window,
        diagnostics,
    })
}

/// `sigma_n`: weights proportional to `exp(S_n phi)` on a filtered set.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbitMeasure {
    pub points: Vec<PeriodicPoint>,
    pub weights: Vec<f64>,
    /// `ln sum exp(S_n phi)`.
    pub log_normalization: f64,
}

impl PeriodicOrbitMeasure {
    pub fn period(&self) -> usize {
        self.points[0].period
    }
}

pub fn orbit_measure(points: &[PeriodicPoint], map: &RationalMap, phi: &Potential) -> Result<PeriodicOrbitMeasure, PressureError> {
    let first = points.first().ok_or(PressureError::EmptyMeasure)?;
    if let Some(p) = points.iter().find(|p| p.period != first.period) {
        return Err(PressureError::MixedPeriods(first.period, p.period));
    }
    let sums = points
        .par_iter()
        .map(|p| {
            phi.birkhoff_sum(map, p.z, p.period)
                .map_err(|source| PressureError::AtPoint { z: p.z, source })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let log_normalization = log_sum_exp(&sums);
    let weights = sums.iter().map(|s| (s - log_normalization).exp()).collect();
    Ok(PeriodicOrbitMeasure {
        points: points.to_vec(),
        weights,
        log_normalization,
    })
}

/// `sum_i w_i (1/n) S_n psi(z_i)`.
pub fn measure_integral(mu: &PeriodicOrbitMeasure, map: &RationalMap, psi: &Potential) -> Result<f64, PressureError> {
    let n = mu.period();
    let values = mu
        .points
        .par_iter()
        .map(|p| {
            psi.birkhoff_sum(map, p.z, n)
                .map_err(|source| PressureError::AtPoint { z: p.z, source })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(values.iter().zip(&mu.weights).map(|(v, w)| w * v).sum::<f64>() / n as f64)
}

/// `chi(mu) = sum_i w_i (1/n) ln |lambda_i|`.
pub fn lyapunov_exponent(mu: &PeriodicOrbitMeasure) -> Result<f64, PressureError> {
    let n = mu.period() as f64;
    let mut total = 0.0;
    for (p, w) in mu.points.iter().zip(&mu.weights) {
        if p.multiplier.norm() == 0.0 || !p.log_abs_multiplier.is_finite() {
            return Err(PressureError::ZeroMultiplier { z: p.z });
        }
        total += w * p.log_abs_multiplier / n;
    }
    Ok(total)
}
