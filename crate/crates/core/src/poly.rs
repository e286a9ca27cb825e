//! Dense univariate polynomials over `Complex64` and a simultaneous root finder.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Polynomial with coefficients stored in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

/// Aberth–Ehrlich iteration did not settle within its budget.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("root iteration did not converge after {iterations} steps (last correction {last_step:e})")]
pub struct RootError {
    pub iterations: usize,
    pub last_step: f64,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Index of the highest nonzero coefficient (0 for constants and the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| *c != Complex64::new(0.0, 0.0))
            .unwrap_or(0)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs
            .get(self.degree())
            .copied()
            .unwrap_or_default()
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Sum of |a_k| |z|^k: the magnitude scale against which cancellation in `eval` is judged.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `self - w * other`, used to form P(u) - w Q(u) for inverse branches.
    pub fn sub_scaled(&self, w: Complex64, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Polynomial::new(
            (0..len)
                .map(|k| {
                    let a = self.coeffs.get(k).copied().unwrap_or(zero);
                    let b = other.coeffs.get(k).copied().unwrap_or(zero);
                    a - w * b
                })
                .collect(),
        )
    }

    /// All roots of the polynomial, counted with multiplicity.
    ///
    /// Degrees one and two use closed forms (the quadratic in its cancellation-free
    /// variant); higher degrees run Aberth–Ehrlich from a perturbed circle of
    /// starting points.
    pub fn roots(&self) -> Result<Vec<Complex64>, RootError> {
        let deg = self.degree();
        let c = &self.coeffs;
        match deg {
            0 => Ok(Vec::new()),
            1 => Ok(vec![-c[0] / c[1]]),
            2 => Ok(quadratic_roots(c[2], c[1], c[0]).to_vec()),
            _ => aberth(&self.coeffs[..=deg], 500, 1e-15),
        }
    }
}

/// Roots of a z² + b z + c with the larger-magnitude root taken first from the
/// well-conditioned branch and the second recovered through Vieta.
pub fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc);
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [q / a, c / q]
}

fn aberth(coeffs: &[Complex64], max_iter: usize, tol: f64) -> Result<Vec<Complex64>, RootError> {
    let deg = coeffs.len() - 1;
    let poly = Polynomial::new(coeffs.to_vec());
    let lead = coeffs[deg].norm();
    // Fujiwara-style bound; every root lies inside this radius.
    let radius = (0..deg)
        .map(|k| (coeffs[k].norm() / lead).powf(1.0 / (deg - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(radius * 0.5, angle)
        })
        .collect();

    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let z = roots[i];
            let (p, dp) = poly.eval_with_derivative(z);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &w)| (z - w).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                roots[i] = z - step;
                max_step = max_step.max(step.norm() / (1.0 + z.norm()));
            }
        }
        last_step = max_step;
        if max_step <= tol {
            return Ok(roots);
        }
    }
    // Aberth stalls around multiple roots at ~sqrt(eps); accept that accuracy.
    if last_step <= 1e-7 {
        return Ok(roots);
    }
    Err(RootError {
        iterations: max_iter,
        last_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = Polynomial::new(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 1.0)]);
        let z = c(0.7, -1.3);
        let direct = c(1.0, 0.0) + c(0.0, 2.0) * z + c(-3.0, 1.0) * z * z;
        assert!((p.eval(z) - direct).norm() < 1e-14);
        let (_, dp) = p.eval_with_derivative(z);
        let direct_d = c(0.0, 2.0) + 2.0 * c(-3.0, 1.0) * z;
        assert!((dp - direct_d).norm() < 1e-14);
    }

    #[test]
    fn quadratic_has_no_cancellation() {
        // x^2 - 1e8 x + 1 has a tiny root near 1e-8
        let [r1, r2] = quadratic_roots(c(1.0, 0.0), c(-1e8, 0.0), c(1.0, 0.0));
        let small = if r1.norm() < r2.norm() { r1 } else { r2 };
        assert!((small.re - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn aberth_finds_roots_of_unity() {
        let mut coeffs = vec![c(0.0, 0.0); 8];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[7] = c(1.0, 0.0);
        let roots = Polynomial::new(coeffs).roots().unwrap();
        assert_eq!(roots.len(), 7);
        for k in 0..7 {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 7.0);
            assert!(roots.iter().any(|r| (r - w).norm() < 1e-12));
        }
    }

    #[test]
    fn aberth_cubic_with_real_roots() {
        // (z-1)(z+2)(z-3) = z^3 - 2z^2 - 5z + 6
        let p = Polynomial::from_real(&[6.0, -5.0, -2.0, 1.0]);
        let mut roots: Vec<f64> = p.roots().unwrap().iter().map(|r| r.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (r, e) in roots.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_and_degree() {
        let p = Polynomial::from_real(&[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.derivative(), Polynomial::from_real(&[2.0, 6.0, 0.0]));
    }
}
