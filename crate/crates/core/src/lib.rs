//! Periodic-point pressure for rational maps of the Riemann sphere.
//!
//! The crate enumerates fixed points of `f^n`, filters them by the uniform
//! expansion condition `|(f^k)'(f^i z)| >= c e^{k alpha}`, and compares the
//! resulting periodic-point pressure with the classical pressure computed from
//! `(n, eps)`-separated sets. Bowen's equation is solved on top of both.

// Negated comparisons are used so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bowen;
pub mod cache;
pub mod cli;
pub mod config;
pub mod map;
pub mod numerics;
pub mod periodic;
pub mod poly;
pub mod potential;
pub mod pressure;
pub mod report;
pub mod sampler;
pub mod separated;

pub use map::{spherical_dist, MapError, Metric, OrbitSegment, Point, RationalMap, ScaledComplex};
pub use num_complex::Complex64;
pub use periodic::{
    brute_force_membership, filter_per_alpha_c, find_periodic, EnumerationReport, FilterParams,
    PeriodicEnumerator, PeriodicError, PeriodicPoint, PeriodicSet, SearchOptions, Stability,
};
pub use potential::{Potential, PotentialError};
pub use sampler::{
    escape_classify, inverse_iteration_sample, min_potential, EscapeClass, Generator, JuliaSample,
    SampleError, SampledMinimum,
};
