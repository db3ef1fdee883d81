use std::fmt;
use std::sync::Arc;

use super::bernstein::BernsteinComponent;
use super::reference::Interval;
use super::restrict::BoxRestriction;
use crate::{Error, Result};

/// Default residual tolerance for inversion.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Bisection iteration cap.
pub const MAX_BISECTION_ITERS: usize = 200;

/// Affine component `offset + Σ_j w_j z_j` with a positive last weight.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineComponent {
    weights: Vec<f64>,
    offset: f64,
}

impl AffineComponent {
    pub fn new(weights: Vec<f64>, offset: f64) -> Result<Self> {
        match weights.last() {
            None => Err(Error::Coefficients("affine component needs weights".into())),
            Some(&w) if !(w > 0.0 && w.is_finite()) => Err(Error::Coefficients(format!(
                "last affine weight must be positive, got {w}"
            ))),
            _ if weights.iter().chain([&offset]).any(|v| !v.is_finite()) => {
                Err(Error::Coefficients("affine coefficients must be finite".into()))
            }
            _ => Ok(AffineComponent { weights, offset }),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.offset + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// One monotone component `z^{[i]} ↦ T(z)_i`.
#[derive(Clone, Debug, PartialEq)]
pub enum Component {
    Bernstein(BernsteinComponent),
    Affine(AffineComponent),
}

impl Component {
    pub fn arity(&self) -> usize {
        match self {
            Component::Bernstein(b) => b.arity(),
            Component::Affine(a) => a.weights.len(),
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            Component::Bernstein(b) => b.eval(z),
            Component::Affine(a) => a.eval(z),
        }
    }

    fn section<'a>(&'a self, prefix: &[f64]) -> Box<dyn Fn(f64) -> f64 + 'a> {
        match self {
            Component::Bernstein(b) => Box::new(b.section(prefix)),
            Component::Affine(a) => {
                let base = a.eval(prefix);
                let w = *a.weights.last().unwrap();
                Box::new(move |t| base + w * t)
            }
        }
    }
}

enum Node {
    Explicit {
        domain: Vec<Interval>,
        components: Vec<Component>,
    },
    Restriction(BoxRestriction),
    Composition {
        outer: TriangularMap,
        inner: TriangularMap,
    },
}

/// Monotone triangular transport map. Cheap to clone; immutable.
#[derive(Clone)]
pub struct TriangularMap {
    node: Arc<Node>,
    dim: usize,
}

impl fmt::Debug for TriangularMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Explicit { components, .. } => f
                .debug_struct("TriangularMap")
                .field("dim", &self.dim)
                .field("components", components)
                .finish(),
            Node::Restriction(r) => f.debug_tuple("Restriction").field(r).finish(),
            Node::Composition { outer, inner } => f
                .debug_struct("Composition")
                .field("outer", outer)
                .field("inner", inner)
                .finish(),
        }
    }
}

impl TriangularMap {
    /// Map on the unit cube from components; component `i` must have arity `i + 1`.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let d = components.len();
        Self::with_domain(components, vec![Interval::UNIT; d])
    }

    pub fn with_domain(components: Vec<Component>, domain: Vec<Interval>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("a map needs at least one component".into()));
        }
        if domain.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: domain.len(),
            });
        }
        for (i, c) in components.iter().enumerate() {
            if c.arity() != i + 1 {
                return Err(Error::Coefficients(format!(
                    "component {i} has arity {}, expected {}",
                    c.arity(),
                    i + 1
                )));
            }
            if matches!(c, Component::Bernstein(_)) && domain[i] != Interval::UNIT {
                return Err(Error::Parameter(
                    "Bernstein components live on the unit interval".into(),
                ));
            }
        }
        let dim = components.len();
        Ok(TriangularMap {
            node: Arc::new(Node::Explicit { domain, components }),
            dim,
        })
    }

    /// Identity on `[0, 1]^d`.
    pub fn identity(dim: usize) -> Self {
        Self::identity_on(vec![Interval::UNIT; dim])
    }

    /// Identity on an arbitrary product domain.
    pub fn identity_on(domain: Vec<Interval>) -> Self {
        let components = (0..domain.len())
            .map(|i| {
                let mut w = vec![0.0; i + 1];
                w[i] = 1.0;
                Component::Affine(AffineComponent::new(w, 0.0).unwrap())
            })
            .collect();
        Self::with_domain(components, domain).expect("identity is valid")
    }

    pub(crate) fn from_restriction(r: BoxRestriction) -> Self {
        let dim = r.dim();
        TriangularMap {
            node: Arc::new(Node::Restriction(r)),
            dim,
        }
    }

    /// Lazy composition `outer ∘ inner`.
    pub fn compose(outer: &TriangularMap, inner: &TriangularMap) -> Result<Self> {
        if outer.dim != inner.dim {
            return Err(Error::DimensionMismatch {
                expected: outer.dim,
                got: inner.dim,
            });
        }
        Ok(TriangularMap {
            node: Arc::new(Node::Composition {
                outer: outer.clone(),
                inner: inner.clone(),
            }),
            dim: outer.dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Input domain, one interval per coordinate.
    pub fn domain(&self) -> Vec<Interval> {
        match &*self.node {
            Node::Explicit { domain, .. } => domain.clone(),
            Node::Restriction(r) => r.reference().domain(),
            Node::Composition { inner, .. } => inner.domain(),
        }
    }

    /// Explicit components, if this map is not a composition or restriction.
    pub fn components(&self) -> Option<&[Component]> {
        match &*self.node {
            Node::Explicit { components, .. } => Some(components),
            _ => None,
        }
    }

    fn check_domain(&self, z: &[f64]) -> Result<()> {
        if z.len() > self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        for (coord, (&v, iv)) in z.iter().zip(self.domain()).enumerate() {
            if v.is_nan() || !iv.contains(v) {
                return Err(Error::Domain {
                    coord,
                    value: v,
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        Ok(())
    }

    /// `T(z)`.
    pub fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        self.forward_prefix(z)
    }

    /// `T^{[k]}(z^{[k]})` for a prefix of length `k ≤ d`.
    pub fn forward_prefix(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(z)?;
        Ok(self.eval_prefix(z))
    }

    /// Unchecked prefix evaluation.
    pub(crate) fn eval_prefix(&self, z: &[f64]) -> Vec<f64> {
        match &*self.node {
            Node::Explicit { components, .. } => (0..z.len()).map(|k| components[k].eval(&z[..=k])).collect(),
            Node::Restriction(r) => r.eval_prefix(z),
            Node::Composition { outer, inner } => outer.eval_prefix(&inner.eval_prefix(z)),
        }
    }

    /// Output coordinate `z.len() - 1` only.
    pub(crate) fn eval_last(&self, z: &[f64]) -> f64 {
        match &*self.node {
            Node::Explicit { components, .. } => components[z.len() - 1].eval(z),
            Node::Restriction(r) => *r.eval_prefix(z).last().unwrap(),
            Node::Composition { outer, inner } => outer.eval_last(&inner.eval_prefix(z)),
        }
    }

    /// Component `i = z.len() - 1` evaluated at `z^{[i]}`, with domain checks.
    pub fn component_value(&self, z: &[f64]) -> Result<f64> {
        if z.is_empty() {
            return Err(Error::Parameter("empty prefix".into()));
        }
        self.check_domain(z)?;
        Ok(self.eval_last(z))
    }

    /// Range of component `prefix.len()` over its own coordinate, for a fixed
    /// reference-space prefix.
    pub fn component_range(&self, prefix: &[f64]) -> Result<Interval> {
        self.check_domain(prefix)?;
        let iv = self.domain()[prefix.len()];
        let mut z = prefix.to_vec();
        z.push(iv.lo);
        let lo = self.eval_last(&z);
        *z.last_mut().unwrap() = iv.hi;
        let hi = self.eval_last(&z);
        Ok(Interval::new(lo, hi))
    }

    /// Solves `T^{[i]}(z^{[i]}) = x^{[i]}` coordinate by coordinate with bisection.
    pub fn invert_prefix(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        if x.len() > self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
        }
        let domain = self.domain();
        let mut z: Vec<f64> = Vec::with_capacity(x.len());
        for (k, &target) in x.iter().enumerate() {
            let root = match &*self.node {
                Node::Explicit { components, .. } => bisect(components[k].section(&z), target, domain[k], tol, k)?,
                _ => {
                    let mut w = z.clone();
                    w.push(0.0);
                    bisect(
                        |t| {
                            w[k] = t;
                            self.eval_last(&w)
                        },
                        target,
                        domain[k],
                        tol,
                        k,
                    )?
                }
            };
            z.push(root);
        }
        Ok(z)
    }
}

fn bracket<G: FnMut(f64) -> f64>(g: &mut G, target: f64, iv: Interval) -> (f64, f64) {
    if iv.is_bounded() {
        return (iv.lo, iv.hi);
    }
    let mut lo = if iv.lo.is_finite() { iv.lo } else { -1.0 };
    let mut hi = if iv.hi.is_finite() { iv.hi } else { 1.0 };
    while !iv.lo.is_finite() && g(lo) > target && lo > -64.0 {
        lo *= 2.0;
    }
    while !iv.hi.is_finite() && g(hi) < target && hi < 64.0 {
        hi *= 2.0;
    }
    (lo, hi)
}

/// Root of a nondecreasing scalar function on `iv`.
fn bisect<G: FnMut(f64) -> f64>(mut g: G, target: f64, iv: Interval, tol: f64, coord: usize) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::NoRoot {
            coord,
            target,
            lo: f64::NAN,
            hi: f64::NAN,
        });
    }
    let (mut lo, mut hi) = bracket(&mut g, target, iv);
    let (g_lo, g_hi) = (g(lo), g(hi));
    let no_root = || Error::NoRoot {
        coord,
        target,
        lo: g_lo,
        hi: g_hi,
    };
    if target < g_lo - tol || target > g_hi + tol {
        return Err(no_root());
    }
    if target <= g_lo {
        return Ok(lo);
    }
    if target >= g_hi {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == target {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = ((g(lo) - target).abs(), (g(hi) - target).abs());
    let (best, resid) = if r_lo <= r_hi { (lo, r_lo) } else { (hi, r_hi) };
    if resid > tol {
        return Err(no_root());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> TriangularMap {
        TriangularMap::new(vec![Component::Bernstein(
            BernsteinComponent::new(vec![1], vec![0.0, 2.0]).unwrap(),
        )])
        .unwrap()
    }

    fn affine(rows: &[(&[f64], f64)]) -> TriangularMap {
        TriangularMap::new(
            rows.iter()
                .map(|(w, b)| Component::Affine(AffineComponent::new(w.to_vec(), *b).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_forward() {
        let id = TriangularMap::new(vec![
            Component::Bernstein(BernsteinComponent::identity(1)),
            Component::Bernstein(BernsteinComponent::identity(2)),
        ])
        .unwrap();
        let y = id.forward(&[0.3, 0.7]).unwrap();
        assert_relative_eq!(y[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(y[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn forward_of_linear_density() {
        assert_relative_eq!(square().forward(&[0.5]).unwrap()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn negative_coefficient_fails_construction() {
        assert!(matches!(
            BernsteinComponent::new(vec![2], vec![1.0, -1.0, 1.0]),
            Err(Error::Coefficients(_))
        ));
    }

    #[test]
    fn forward_outside_domain_fails() {
        assert!(matches!(
            TriangularMap::identity(2).forward(&[0.5, 1.5]),
            Err(Error::Domain { coord: 1, .. })
        ));
        assert!(TriangularMap::identity(2).forward(&[0.5]).is_err());
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let c = Component::Affine(AffineComponent::new(vec![1.0], 0.0).unwrap());
        assert!(TriangularMap::new(vec![c.clone(), c]).is_err());
        assert!(AffineComponent::new(vec![1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn invert_identity_and_square() {
        let z = TriangularMap::identity(2).invert_prefix(&[0.4, 0.9], 1e-10).unwrap();
        assert!((z[0] - 0.4).abs() < 1e-10 && (z[1] - 0.9).abs() < 1e-10);
        let r = square().invert_prefix(&[0.25], 1e-10).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn invert_outside_range_has_no_root() {
        let half = affine(&[(&[0.5], 0.0)]);
        assert!(matches!(
            half.invert_prefix(&[0.9], 1e-10),
            Err(Error::NoRoot { coord: 0, .. })
        ));
    }

    #[test]
    fn composition_evaluates_outer_after_inner() {
        let outer = square();
        let inner = affine(&[(&[0.5], 0.5)]);
        let c = TriangularMap::compose(&outer, &inner).unwrap();
        assert_relative_eq!(c.forward(&[0.0]).unwrap()[0], 0.25, epsilon = 1e-15);
        assert!(TriangularMap::compose(&outer, &TriangularMap::identity(2)).is_err());
    }

    #[test]
    fn composition_inverts() {
        let t = affine(&[(&[1.0], 0.0), (&[0.5, 0.5], 0.0)]);
        let c = TriangularMap::compose(&t, &TriangularMap::identity(2)).unwrap();
        let x = c.forward(&[0.2, 0.9]).unwrap();
        let z = c.invert_prefix(&x, 1e-12).unwrap();
        assert_relative_eq!(z[0], 0.2, epsilon = 1e-10);
        assert_relative_eq!(z[1], 0.9, epsilon = 1e-10);
    }

    #[test]
    fn infinite_domain_inversion() {
        let t = TriangularMap::with_domain(
            vec![Component::Affine(AffineComponent::new(vec![3.0], 1.0).unwrap())],
            vec![Interval::REAL],
        )
        .unwrap();
        let z = t.invert_prefix(&[-20.0], 1e-10).unwrap();
        assert_relative_eq!(z[0], -7.0, epsilon = 1e-9);
    }
}
