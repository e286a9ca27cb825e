//! Rational maps of the Riemann sphere: evaluation, derivatives, orbits and the
//! base metric used by the dynamical metrics `d_n`.

use crate::poly::{Polynomial, RootError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative tolerance for pole / indeterminate-form detection.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Orbit-derivative products are renormalized once their modulus leaves
/// `[1/RESCALE_THRESHOLD, RESCALE_THRESHOLD]`.
const RESCALE_THRESHOLD: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("{which} coefficient list is empty")]
    EmptyCoefficients { which: &'static str },
    #[error("leading {which} coefficient {value:e} is below tolerance {tolerance:e}")]
    DegenerateLeading {
        which: &'static str,
        value: f64,
        tolerance: f64,
    },
    #[error("map degree {degree} is below 2")]
    DegreeTooLow { degree: usize },
    #[error("numerator and denominator share the root {root}")]
    CommonRoot { root: Complex64 },
    #[error("numerically indeterminate form 0/0 at {z}")]
    Indeterminate { z: Complex64 },
    #[error("orbit hit a pole at step {step}")]
    PoleHit { step: usize },
    #[error("orbit escaped radius {radius} at step {step}")]
    Escaped { step: usize, radius: f64 },
    #[error("derivative requested at a pole ({z})")]
    DerivativeAtPole { z: Complex64 },
    #[error("orbit length must be at least 1")]
    EmptyOrbit,
    #[error("root finding for inverse branches failed: {0}")]
    Roots(#[from] RootError),
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite(Complex64),
    Infinity,
}

impl Point {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Point::Finite(z) => Some(z),
            Point::Infinity => None,
        }
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        if z.is_finite() {
            Point::Finite(z)
        } else {
            Point::Infinity
        }
    }
}

/// Chordal distance `2|z-w| / sqrt((1+|z|^2)(1+|w|^2))`, extended to infinity.
pub fn spherical_dist(z: Point, w: Point) -> f64 {
    match (z, w) {
        (Point::Infinity, Point::Infinity) => 0.0,
        (Point::Finite(a), Point::Infinity) | (Point::Infinity, Point::Finite(a)) => {
            2.0 / (1.0 + a.norm_sqr()).sqrt()
        }
        (Point::Finite(a), Point::Finite(b)) => chordal(a, b),
    }
}

pub(crate) fn chordal(a: Complex64, b: Complex64) -> f64 {
    2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

/// Base metric `d` from which `d_n(z, y) = max_{k<n} d(f^k z, f^k y)` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Chordal,
    Euclidean,
}

impl Metric {
    pub fn dist(self, a: Complex64, b: Complex64) -> f64 {
        match self {
            Metric::Chordal => chordal(a, b),
            Metric::Euclidean => (a - b).norm(),
        }
    }
}

/// `(f^k)'(z)` stored as `mantissa * exp(log_scale)` so that long orbits neither
/// overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn one() -> Self {
        Self {
            mantissa: Complex64::new(1.0, 0.0),
            log_scale: 0.0,
        }
    }

    pub fn mul(&mut self, factor: Complex64) {
        self.mantissa *= factor;
        let m = self.mantissa.norm();
        if m != 0.0 && !(1.0 / RESCALE_THRESHOLD..=RESCALE_THRESHOLD).contains(&m) {
            self.log_scale += m.ln();
            self.mantissa /= m;
        }
    }

    /// `ln |value|`; `-inf` when the product vanished.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// The plain complex value (may overflow to infinity).
    pub fn to_complex(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// Finite orbit segment `(z, f(z), ..., f^{n-1}(z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    pub points: Vec<Complex64>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A rational map `P/Q` of degree `max(deg P, deg Q) >= 2`.
///
/// Polynomial maps carry the denominator `[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    numerator: Polynomial,
    denominator: Polynomial,
    num_deriv: Polynomial,
    den_deriv: Polynomial,
    degree: usize,
    scale: f64,
}

impl RationalMap {
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Result<Self, MapError> {
        if numerator.is_empty() {
            return Err(MapError::EmptyCoefficients { which: "numerator" });
        }
        if denominator.is_empty() {
            return Err(MapError::EmptyCoefficients {
                which: "denominator",
            });
        }
        let scale = numerator
            .iter()
            .chain(denominator.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let tolerance = POLE_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        for (which, list) in [("numerator", &numerator), ("denominator", &denominator)] {
            let lead = list.last().map(|c| c.norm()).unwrap_or(0.0);
            if lead <= tolerance {
                return Err(MapError::DegenerateLeading {
                    which,
                    value: lead,
                    tolerance,
                });
            }
        }
        let numerator = Polynomial::new(numerator);
        let denominator = Polynomial::new(denominator);
        let degree = numerator.degree().max(denominator.degree());
        if degree < 2 {
            return Err(MapError::DegreeTooLow { degree });
        }
        if denominator.degree() > 0 {
            for root in denominator.roots()? {
                let p = numerator.eval(root).norm();
                if p <= 1e-8 * numerator.abs_eval(root).max(f64::MIN_POSITIVE) {
                    return Err(MapError::CommonRoot { root });
                }
            }
        }
        Ok(Self {
            num_deriv: numerator.derivative(),
            den_deriv: denominator.derivative(),
            numerator,
            denominator,
            degree,
            scale,
        })
    }

    /// Polynomial map from ascending coefficients.
    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self, MapError> {
        Self::new(coeffs, vec![Complex64::new(1.0, 0.0)])
    }

    /// Convenience constructor for real coefficients.
    pub fn from_real(numerator: &[f64], denominator: &[f64]) -> Result<Self, MapError> {
        let lift = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(lift(numerator), lift(denominator))
    }

    /// `z^2 + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::polynomial(vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .expect("z^2 + c is a valid map")
    }

    /// `z^d` for `d >= 2`.
    pub fn power(d: usize) -> Result<Self, MapError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        coeffs[d] = Complex64::new(1.0, 0.0);
        Self::polynomial(coeffs)
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.denominator.degree() == 0
    }

    /// `R = max(2, 2 max|coeff|)` for polynomial maps (coefficients normalized by
    /// the constant denominator); `None` for rational maps.
    pub fn escape_radius(&self) -> Option<f64> {
        if !self.is_polynomial() {
            return None;
        }
        let q0 = self.denominator.coeffs()[0].norm();
        Some((2.0 * self.numerator.scale() / q0).max(2.0))
    }

    /// Euclidean for polynomials, chordal otherwise.
    pub fn default_metric(&self) -> Metric {
        if self.is_polynomial() {
            Metric::Euclidean
        } else {
            Metric::Chordal
        }
    }

    /// Number of fixed points of `f^n` counted with multiplicity in the plane:
    /// `d^n` for polynomials, `d^n + 1` for rational maps.
    pub fn expected_fixed_points(&self, n: usize) -> usize {
        let base = self.degree.pow(n as u32);
        if self.is_polynomial() {
            base
        } else {
            base + 1
        }
    }

    /// `f(z)` on the sphere; infinity when the denominator vanishes.
    pub fn eval(&self, z: Complex64) -> Result<Point, MapError> {
        let p = self.numerator.eval(z);
        let q = self.denominator.eval(z);
        let q_tol = POLE_TOLERANCE * self.denominator.abs_eval(z);
        if q.norm() <= q_tol {
            let p_tol = POLE_TOLERANCE * self.numerator.abs_eval(z);
            if p.norm() <= p_tol {
                return Err(MapError::Indeterminate { z });
            }
            return Ok(Point::Infinity);
        }
        Ok(Point::from(p / q))
    }

    /// `f` extended to the sphere, including the image of infinity.
    pub fn eval_point(&self, z: Point) -> Result<Point, MapError> {
        match z {
            Point::Finite(z) => self.eval(z),
            Point::Infinity => {
                let (dp, dq) = (self.numerator.degree(), self.denominator.degree());
                Ok(match dp.cmp(&dq) {
                    std::cmp::Ordering::Greater => Point::Infinity,
                    std::cmp::Ordering::Equal => Point::Finite(
                        self.numerator.leading() / self.denominator.leading(),
                    ),
                    std::cmp::Ordering::Less => Point::Finite(Complex64::new(0.0, 0.0)),
                })
            }
        }
    }

    /// One step of the map restricted to the plane.
    pub(crate) fn step(&self, z: Complex64, step: usize) -> Result<Complex64, MapError> {
        match self.eval(z)? {
            Point::Finite(w) => Ok(w),
            Point::Infinity => Err(MapError::PoleHit { step }),
        }
    }

    /// `f'(z) = (P'Q - PQ')/Q^2`.
    pub fn deriv(&self, z: Complex64) -> Result<Complex64, MapError> {
        let (p, dp) = (self.numerator.eval(z), self.num_deriv.eval(z));
        if self.is_polynomial() {
            return Ok(dp / self.denominator.coeffs()[0]);
        }
        let (q, dq) = (self.denominator.eval(z), self.den_deriv.eval(z));
        if q.norm() <= POLE_TOLERANCE * self.denominator.abs_eval(z) {
            return Err(MapError::DerivativeAtPole { z });
        }
        Ok((dp * q - p * dq) / (q * q))
    }

    /// `ln |f'(z)|` computed as `ln|P'Q - PQ'| - 2 ln|Q|`; `-inf` at critical points.
    pub fn log_abs_deriv(&self, z: Complex64) -> Result<f64, MapError> {
        let (p, dp) = (self.numerator.eval(z), self.num_deriv.eval(z));
        let (q, dq) = (self.denominator.eval(z), self.den_deriv.eval(z));
        if q.norm() <= POLE_TOLERANCE * self.denominator.abs_eval(z) {
            return Err(MapError::DerivativeAtPole { z });
        }
        let top = dp * q - p * dq;
        Ok(top.norm().ln() - 2.0 * q.norm().ln())
    }

    /// `(z, f(z), ..., f^{n-1}(z))`; polynomial orbits abort once they leave the
    /// escape radius.
    pub fn iterate(&self, z: Complex64, n: usize) -> Result<OrbitSegment, MapError> {
        if n == 0 {
            return Err(MapError::EmptyOrbit);
        }
        let radius = self.escape_radius();
        let mut points = Vec::with_capacity(n);
        let mut w = z;
        for step in 0..n {
            if step > 0 {
                w = self.step(w, step)?;
            }
            if let Some(r) = radius {
                if w.norm() > r {
                    return Err(MapError::Escaped { step, radius: r });
                }
            }
            points.push(w);
        }
        Ok(OrbitSegment { points })
    }

    /// `(f^k)'(z)` by the chain rule along the orbit; `k = 0` gives 1.
    pub fn orbit_derivative(&self, z: Complex64, k: usize) -> Result<ScaledComplex, MapError> {
        let mut acc = ScaledComplex::one();
        let mut w = z;
        for step in 0..k {
            acc.mul(self.deriv(w)?);
            if step + 1 < k {
                w = self.step(w, step + 1)?;
            }
        }
        Ok(acc)
    }

    /// `(f^n(z), (f^n)'(z))` without escape checks; `None` on poles or overflow.
    /// Used by Newton's method on `f^n(z) - z`.
    pub(crate) fn iterate_with_derivative(&self, z: Complex64, n: usize) -> Option<(Complex64, Complex64)> {
        let mut w = z;
        let mut d = Complex64::new(1.0, 0.0);
        for step in 0..n {
            d *= self.deriv(w).ok()?;
            w = self.step(w, step + 1).ok()?;
            if !w.is_finite() || !d.is_finite() {
                return None;
            }
        }
        Some((w, d))
    }

    /// All preimages of `w`: roots of `P(u) - w Q(u)`.
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>, MapError> {
        let eq = self.numerator.sub_scaled(w, &self.denominator);
        Ok(eq.roots()?)
    }

    /// Fixed points of `f` in the plane: roots of `P(z) - z Q(z)`.
    pub fn fixed_points(&self) -> Result<Vec<Complex64>, MapError> {
        let shifted_den = {
            let mut c = vec![Complex64::new(0.0, 0.0)];
            c.extend_from_slice(self.denominator.coeffs());
            Polynomial::new(c)
        };
        let eq = self
            .numerator
            .sub_scaled(Complex64::new(1.0, 0.0), &shifted_den);
        Ok(eq.roots()?)
    }

    /// Canonical text form of the coefficients, used for cache fingerprints.
    pub fn canonical_coefficients(&self) -> String {
        let fmt = |p: &Polynomial| {
            p.coeffs()
                .iter()
                .map(|c| format!("{:.16e},{:.16e}", c.re, c.im))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!("num={}|den={}", fmt(&self.numerator), fmt(&self.denominator))
    }
}
