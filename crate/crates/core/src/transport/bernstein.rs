//! Monotone components built from integrated Bernstein densities.
//!
//! A component of arity `k` with degree list `[n_1, …, n_{k-1}, m]` is
//!
//! ```text
//! T(z_1..z_k) = ∫_0^{z_k} Σ_{a,c} C[a, c] Π_j B_{a_j}^{n_j}(z_j) B_c^m(τ) dτ
//! ```
//!
//! with `C ≥ 0`. The basis is the full Bernstein basis `{B_0^m, …, B_m^m}`.
//! Each fibre `C[a, ·]` is rescaled to sum to `m + 1`, which makes the density
//! integrate to one for every prefix (partition of unity) so the component maps
//! `[0, 1]` onto `[0, 1]`.

use crate::{Error, Result};

/// Values `B_0^n(x), …, B_n^n(x)` by the de Casteljau recurrence.
pub fn bernstein_basis(n: usize, x: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    let y = 1.0 - x;
    for deg in 1..=n {
        let mut prev = 0.0;
        for v in b.iter_mut().take(deg + 1) {
            let cur = *v;
            *v = y * cur + x * prev;
            prev = cur;
        }
    }
    b
}

/// Evaluates `Σ c_k B_k^n(x)`.
pub fn bernstein_eval(coeffs: &[f64], x: f64) -> f64 {
    let n = coeffs.len() - 1;
    bernstein_basis(n, x).iter().zip(coeffs).map(|(b, c)| b * c).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinComponent {
    degrees: Vec<usize>,
    coefficients: Vec<f64>,
}

impl BernsteinComponent {
    /// Builds a component from a degree list and a row-major coefficient tensor
    /// of shape `(n_1 + 1) × … × (m + 1)`; the last axis is the density degree
    /// in the component's own coordinate.
    pub fn new(degrees: Vec<usize>, coefficients: Vec<f64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Coefficients("degree list is empty".into()));
        }
        let expected: usize = degrees.iter().map(|n| n + 1).product();
        if coefficients.len() != expected {
            return Err(Error::Coefficients(format!(
                "degrees {:?} need {} coefficients, got {}",
                degrees,
                expected,
                coefficients.len()
            )));
        }
        if let Some(c) = coefficients.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Coefficients(format!(
                "coefficients must be finite and nonnegative, found {c}"
            )));
        }
        let width = degrees.last().unwrap() + 1;
        let mut coefficients = coefficients;
        for fibre in coefficients.chunks_mut(width) {
            let s: f64 = fibre.iter().sum();
            if s <= 0.0 {
                return Err(Error::Coefficients(
                    "a coefficient fibre is identically zero; the density would vanish".into(),
                ));
            }
            let scale = width as f64 / s;
            fibre.iter_mut().for_each(|c| *c *= scale);
        }
        Ok(BernsteinComponent { degrees, coefficients })
    }

    /// Unit density: the identity in the last argument.
    pub fn identity(arity: usize) -> Self {
        let degrees = vec![0; arity];
        Self::new(degrees, vec![1.0]).expect("valid identity")
    }

    pub fn arity(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Normalized coefficients.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Density coefficients `c_0..c_m` in the last argument for a fixed prefix.
    fn fibre_coefficients(&self, prefix: &[f64]) -> Vec<f64> {
        let width = *self.degrees.last().unwrap() + 1;
        let k = self.degrees.len() - 1;
        debug_assert_eq!(prefix.len(), k);
        if k == 0 {
            return self.coefficients.clone();
        }
        let bases: Vec<Vec<f64>> = prefix
            .iter()
            .zip(&self.degrees[..k])
            .map(|(&z, &n)| bernstein_basis(n, z.clamp(0.0, 1.0)))
            .collect();
        let mut out = vec![0.0; width];
        let mut idx = vec![0usize; k];
        for fibre in self.coefficients.chunks(width) {
            let w: f64 = idx.iter().zip(&bases).map(|(&a, b)| b[a]).product();
            if w != 0.0 {
                for (o, c) in out.iter_mut().zip(fibre) {
                    *o += w * c;
                }
            }
            // odometer increment, last prefix axis fastest
            for axis in (0..k).rev() {
                idx[axis] += 1;
                if idx[axis] <= self.degrees[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        out
    }

    /// Component value at `z = (prefix, z_k)`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let (prefix, last) = z.split_at(z.len() - 1);
        integrated(&self.fibre_coefficients(prefix), last[0])
    }

    /// The component as a function of its own coordinate for a fixed prefix.
    pub(crate) fn section(&self, prefix: &[f64]) -> impl Fn(f64) -> f64 {
        let c = self.fibre_coefficients(prefix);
        move |t| integrated(&c, t)
    }

    /// Density `∂T/∂z_k` at `z`.
    pub fn density(&self, z: &[f64]) -> f64 {
        let (prefix, last) = z.split_at(z.len() - 1);
        bernstein_eval(&self.fibre_coefficients(prefix), last[0].clamp(0.0, 1.0))
    }
}

/// `∫_0^x Σ_k c_k B_k^m`, for density coefficients `c` in the last argument.
fn integrated(c: &[f64], x: f64) -> f64 {
    let m = c.len() - 1;
    let x = x.clamp(0.0, 1.0);
    // ∫_0^x B_k^m = (1/(m+1)) Σ_{j>k} B_j^{m+1}(x)
    let b = bernstein_basis(m + 1, x);
    let mut cum = 0.0;
    let mut acc = 0.0;
    for j in 1..=m + 1 {
        cum += c[j - 1];
        acc += b[j] * cum;
    }
    acc / (m + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_is_partition_of_unity() {
        for n in 0..10 {
            for &x in &[0.0, 0.13, 0.5, 0.99, 1.0] {
                let s: f64 = bernstein_basis(n, x).iter().sum();
                assert_relative_eq!(s, 1.0, epsilon = 1e-14);
            }
        }
        let b = bernstein_basis(2, 0.3);
        assert_relative_eq!(b[0], 0.49, epsilon = 1e-15);
        assert_relative_eq!(b[1], 0.42, epsilon = 1e-15);
        assert_relative_eq!(b[2], 0.09, epsilon = 1e-15);
    }

    #[test]
    fn uniform_coefficients_give_identity() {
        let c = BernsteinComponent::new(vec![3, 4], vec![2.5; 20]).unwrap();
        for &(a, b) in &[(0.3, 0.7), (0.9, 0.1), (0.0, 1.0)] {
            assert_relative_eq!(c.eval(&[a, b]), b, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_density_integrates_to_square() {
        // density 2τ: ∫_0^0.5 2τ dτ = 0.25
        let c = BernsteinComponent::new(vec![1], vec![0.0, 2.0]).unwrap();
        assert_relative_eq!(c.eval(&[0.5]), 0.25, epsilon = 1e-15);
        assert_relative_eq!(c.density(&[0.5]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn normalization_maps_one_to_one() {
        let c = BernsteinComponent::new(vec![2, 1], vec![1.0, 5.0, 0.1, 3.0, 7.0, 0.0]).unwrap();
        for &p in &[0.0, 0.2, 0.77, 1.0] {
            assert_relative_eq!(c.eval(&[p, 1.0]), 1.0, epsilon = 1e-14);
            assert_eq!(c.eval(&[p, 0.0]), 0.0);
        }
    }

    #[test]
    fn invalid_coefficients_are_rejected() {
        assert!(BernsteinComponent::new(vec![1], vec![1.0, -0.1]).is_err());
        assert!(BernsteinComponent::new(vec![1], vec![1.0]).is_err());
        assert!(BernsteinComponent::new(vec![1, 1], vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(BernsteinComponent::new(vec![], vec![]).is_err());
    }
}
