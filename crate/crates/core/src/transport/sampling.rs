use ndarray::Array2;

use super::map::{TriangularMap, DEFAULT_TOL};
use super::reference::ReferenceMeasure;
use super::restrict::GoodSetSpec;
use crate::mc::{self, McRng};
use crate::{Error, Result};

/// Anything that maps points of `Z^d` to points of `Z^d`. Triangular maps
/// implement it; [`FnMap`] wraps arbitrary measurable maps (couplings need
/// no monotonicity).
pub trait PointMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>>;
}

impl PointMap for TriangularMap {
    fn dim(&self) -> usize {
        TriangularMap::dim(self)
    }

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.forward(z)
    }
}

/// Closure-backed [`PointMap`].
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnMap { dim, f }
    }
}

impl<F> PointMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(z))
    }
}

fn check_dims(map_dim: usize, reference: &ReferenceMeasure) -> Result<()> {
    if map_dim != reference.dim {
        return Err(Error::DimensionMismatch {
            expected: map_dim,
            got: reference.dim,
        });
    }
    Ok(())
}

/// Rows `T(z)` for `z ~ ν^d`.
pub fn pushforward_sample<M: PointMap + ?Sized>(
    map: &M,
    reference: &ReferenceMeasure,
    n: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    check_dims(map.dim(), reference)?;
    mc::require_samples(n, 1)?;
    let d = reference.dim;
    mc::try_par_rows(n, d, seed, |rng: &mut McRng, row| {
        let mut z = vec![0.0; d];
        reference.fill(rng, &mut z);
        row.copy_from_slice(&map.apply(&z)?);
        Ok(())
    })
}

/// Draws from `μ(dw^{(i,d]} | x^{[i]})` as `T^{(i,d]}(z̄^{[i]}, τ)` with
/// `τ ~ ν^{d-i}` and `z̄` the preimage of the prefix.
pub fn conditional_sample(
    map: &TriangularMap,
    reference: &ReferenceMeasure,
    x_prefix: &[f64],
    n: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    check_dims(map.dim(), reference)?;
    mc::require_samples(n, 1)?;
    let d = map.dim();
    let i = x_prefix.len();
    if i > d {
        return Err(Error::DimensionMismatch { expected: d, got: i });
    }
    let z_bar = map.invert_prefix(x_prefix, DEFAULT_TOL)?;
    mc::try_par_rows(n, d - i, seed, |rng, row| {
        let mut z = z_bar.clone();
        z.resize(d, 0.0);
        reference.fill(rng, &mut z[i..]);
        let y = map.eval_prefix(&z);
        row.copy_from_slice(&y[i..]);
        Ok(())
    })
}

/// Rejection sampling of `ν^d` restricted to `good`, pushed through `map`.
/// Draws are generated in seeded chunks and accepted in chunk order.
pub fn rejection_sample<M: PointMap + ?Sized>(
    map: &M,
    reference: &ReferenceMeasure,
    good: &GoodSetSpec,
    n: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    check_dims(map.dim(), reference)?;
    mc::require_samples(n, 1)?;
    let d = reference.dim;
    let mut rows: Vec<f64> = Vec::with_capacity(n * d);
    let mut accepted = 0usize;
    let mut round = 0u64;
    const BATCH: usize = 16 * mc::CHUNK_ROWS;
    while accepted < n {
        let batch = reference.sample(BATCH, mc::derive_seed(seed, round))?;
        for z in batch.rows() {
            let z = z.as_slice().unwrap();
            if good.contains(z) {
                rows.extend(map.apply(z)?);
                accepted += 1;
                if accepted == n {
                    break;
                }
            }
        }
        round += 1;
        if round > 10_000 && accepted == 0 {
            return Err(Error::DegenerateSet(
                "rejection sampler accepted nothing; good set looks null".into(),
            ));
        }
    }
    Ok(Array2::from_shape_vec((n, d), rows).expect("row-major buffer of n × d"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic};
    use crate::transport::{AffineComponent, BernsteinComponent, Component};

    #[test]
    fn identity_pushforward_is_uniform() {
        let s = pushforward_sample(&TriangularMap::identity(2), &ReferenceMeasure::uniform(2), 100_000, 3).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = s.column(c).to_vec();
            assert!(ks_statistic(&col, |x| x) < ks_critical(col.len(), 0.01));
        }
    }

    #[test]
    fn square_pushforward_has_sqrt_cdf() {
        let t = TriangularMap::new(vec![Component::Bernstein(
            BernsteinComponent::new(vec![1], vec![0.0, 2.0]).unwrap(),
        )])
        .unwrap();
        let s = pushforward_sample(&t, &ReferenceMeasure::uniform(1), 100_000, 9).unwrap();
        let col: Vec<f64> = s.column(0).to_vec();
        assert!(ks_statistic(&col, |x| x.clamp(0.0, 1.0).sqrt()) < ks_critical(col.len(), 0.01));
    }

    #[test]
    fn conditional_of_linear_map_is_shifted_uniform() {
        let t = TriangularMap::new(vec![
            Component::Affine(AffineComponent::new(vec![1.0], 0.0).unwrap()),
            Component::Affine(AffineComponent::new(vec![0.5, 0.5], 0.0).unwrap()),
        ])
        .unwrap();
        let n = 100_000;
        let s = conditional_sample(&t, &ReferenceMeasure::uniform(2), &[0.6], n, 1).unwrap();
        assert_eq!(s.ncols(), 1);
        let col: Vec<f64> = s.column(0).to_vec();
        assert!(col.iter().all(|&v| (0.3 - 1e-9..=0.8 + 1e-9).contains(&v)));
        let mean = col.iter().sum::<f64>() / n as f64;
        let sigma = 0.5 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.55).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn mismatched_reference_is_rejected() {
        assert!(pushforward_sample(&TriangularMap::identity(2), &ReferenceMeasure::uniform(3), 10, 0).is_err());
        assert!(pushforward_sample(&TriangularMap::identity(2), &ReferenceMeasure::uniform(2), 0, 0).is_err());
    }
}
