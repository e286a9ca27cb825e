//! Finite samples of the Julia set.

use crate::map::{MapError, RationalMap};
use crate::potential::{Potential, PotentialError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_DEPTH: usize = 64;

/// Forward-iteration budget for checking that sample points stay bounded.
/// Julia-set points are forward-unstable: roundoff grows like `e^{k chi}` and
/// pushes an exact sample point off the set after roughly `36 / chi` steps.
pub const ESCAPE_CHECK_BUDGET: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("sample count must be at least 1")]
    EmptyRequest,
    #[error("sample depth must be at least 2, got {0}")]
    DepthTooSmall(usize),
    #[error("escape classification needs a polynomial map")]
    NotPolynomial,
    #[error("no repelling fixed point found")]
    NoRepellingFixedPoint,
    #[error("inverse branch computation failed: {0}")]
    Map(#[from] MapError),
    #[error("potential undefined at sample point {index} ({z}): {source}")]
    Potential {
        index: usize,
        z: Complex64,
        #[source]
        source: PotentialError,
    },
    #[error("sample is empty")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    InverseIteration,
    BoundaryScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JuliaSample {
    pub points: Vec<Complex64>,
    pub generator: Generator,
    pub seed: u64,
    pub count: usize,
}

impl JuliaSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeClass {
    Escaped(usize),
    Bounded,
}

/// Escape-time test against the map's escape radius.
pub fn escape_classify(map: &RationalMap, z: Complex64, max_iter: usize) -> Result<EscapeClass, SampleError> {
    let radius = map.escape_radius().ok_or(SampleError::NotPolynomial)?;
    let mut w = z;
    for step in 0..=max_iter {
        if w.norm() > radius {
            return Ok(EscapeClass::Escaped(step));
        }
        if step < max_iter {
            w = map.step(w, step + 1)?;
        }
    }
    Ok(EscapeClass::Bounded)
}

/// The fixed point with the largest multiplier modulus, provided it exceeds 1.
pub fn repelling_fixed_point(map: &RationalMap) -> Result<Complex64, SampleError> {
    map.fixed_points()?
        .into_iter()
        .filter_map(|z| map.deriv(z).ok().map(|d| (z, d.norm())))
        .filter(|&(_, m)| m > 1.0 + 1e-6)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(z, _)| z)
        .ok_or(SampleError::NoRepellingFixedPoint)
}

/// Backward-orbit sampling: independent chains start at a repelling fixed
/// point, pull back through uniformly chosen inverse branches `depth` times and
/// keep the points after the first `depth / 2` steps. Chain `j` draws from
/// stream `j` of a ChaCha generator keyed by `seed`; chains are concatenated in
/// order, so the result does not depend on the thread count.
pub fn inverse_iteration_sample(
    map: &RationalMap,
    count: usize,
    depth: usize,
    seed: u64,
) -> Result<JuliaSample, SampleError> {
    if count == 0 {
        return Err(SampleError::EmptyRequest);
    }
    if depth < 2 {
        return Err(SampleError::DepthTooSmall(depth));
    }
    let start = repelling_fixed_point(map)?;
    let burn_in = depth / 2;
    let keep = depth - burn_in;
    let chains = count.div_ceil(keep);

    let chunks: Vec<Vec<Complex64>> = (0..chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chain as u64);
            let mut z = start;
            let mut out = Vec::with_capacity(keep);
            for step in 0..depth {
                let pre = map.preimages(z)?;
                if pre.is_empty() {
                    return Err(SampleError::Map(MapError::PoleHit { step }));
                }
                z = pre[rng.gen_range(0..pre.len())];
                if step >= burn_in {
                    out.push(z);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, SampleError>>()?;

    let mut points: Vec<Complex64> = chunks.into_iter().flatten().collect();
    points.truncate(count);
    Ok(JuliaSample {
        count: points.len(),
        points,
        generator: Generator::InverseIteration,
        seed,
    })
}

/// Grid scan for polynomial maps: centers of the cells of a `resolution`²
/// grid over the escape disk whose four corners disagree on escaping within
/// `max_iter` steps. Cheap but coarse; used for seeding only.
pub fn boundary_scan_sample(map: &RationalMap, resolution: usize, max_iter: usize) -> Result<JuliaSample, SampleError> {
    let radius = map.escape_radius().ok_or(SampleError::NotPolynomial)?;
    if resolution == 0 {
        return Err(SampleError::EmptyRequest);
    }
    let h = 2.0 * radius / resolution as f64;
    let corner = |i: usize, j: usize| Complex64::new(-radius + i as f64 * h, -radius + j as f64 * h);
    let bounded: Vec<Vec<bool>> = (0..=resolution)
        .into_par_iter()
        .map(|i| {
            (0..=resolution)
                .map(|j| matches!(escape_classify(map, corner(i, j), max_iter), Ok(EscapeClass::Bounded)))
                .collect()
        })
        .collect();
    let mut points = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            let corners = [bounded[i][j], bounded[i + 1][j], bounded[i][j + 1], bounded[i + 1][j + 1]];
            if corners.iter().any(|&b| b) && !corners.iter().all(|&b| b) {
                points.push(corner(i, j) + Complex64::new(h / 2.0, h / 2.0));
            }
        }
    }
    Ok(JuliaSample {
        count: points.len(),
        points,
        generator: Generator::BoundaryScan,
        seed: 0,
    })
}

/// Minimum of a potential over the sample: an over-estimate of the minimum
/// over the Julia set, always reported together with the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledMinimum {
    pub value: f64,
    pub sample_size: usize,
}

pub fn min_potential(sample: &JuliaSample, map: &RationalMap, phi: &Potential) -> Result<SampledMinimum, SampleError> {
    if sample.points.is_empty() {
        return Err(SampleError::EmptySample);
    }
    let mut value = f64::INFINITY;
    for (index, &z) in sample.points.iter().enumerate() {
        let v = phi
            .eval(map, z)
            .map_err(|source| SampleError::Potential { index, z, source })?;
        value = value.min(v);
    }
    Ok(SampledMinimum {
        value,
        sample_size: sample.points.len(),
    })
}
