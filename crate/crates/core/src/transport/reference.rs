use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mc::{self, McRng};
use crate::stats::{normal_cdf, normal_quantile};
use crate::{Error, Result};

/// Closed interval, possibly unbounded on either side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    UniformUnitCube,
    StandardNormalProduct,
}

/// Factorizing reference measure `ν^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeasure {
    pub kind: ReferenceKind,
    pub dim: usize,
}

impl ReferenceMeasure {
    pub fn new(kind: ReferenceKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("reference dimension must be positive".into()));
        }
        Ok(ReferenceMeasure { kind, dim })
    }

    pub fn uniform(dim: usize) -> Self {
        Self::new(ReferenceKind::UniformUnitCube, dim).expect("positive dimension")
    }

    pub fn normal(dim: usize) -> Self {
        Self::new(ReferenceKind::StandardNormalProduct, dim).expect("positive dimension")
    }

    /// Same kind, different dimension (used for the trailing block `ν^{d-i}`).
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.kind, dim)
    }

    /// Support of a single coordinate.
    pub fn coordinate_domain(&self) -> Interval {
        match self.kind {
            ReferenceKind::UniformUnitCube => Interval::UNIT,
            ReferenceKind::StandardNormalProduct => Interval::REAL,
        }
    }

    pub fn domain(&self) -> Vec<Interval> {
        vec![self.coordinate_domain(); self.dim]
    }

    /// One-dimensional CDF of a coordinate.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            ReferenceKind::UniformUnitCube => x.clamp(0.0, 1.0),
            ReferenceKind::StandardNormalProduct => normal_cdf(x),
        }
    }

    /// One-dimensional quantile of a coordinate.
    pub fn quantile(&self, p: f64) -> f64 {
        match self.kind {
            ReferenceKind::UniformUnitCube => p.clamp(0.0, 1.0),
            ReferenceKind::StandardNormalProduct => normal_quantile(p),
        }
    }

    /// Mass of `[lo, hi]` under one coordinate.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        (self.cdf(hi) - self.cdf(lo)).max(0.0)
    }

    pub fn draw(&self, rng: &mut McRng) -> f64 {
        match self.kind {
            ReferenceKind::UniformUnitCube => rng.random::<f64>(),
            ReferenceKind::StandardNormalProduct => rng.sample(StandardNormal),
        }
    }

    pub fn fill(&self, rng: &mut McRng, row: &mut [f64]) {
        for v in row.iter_mut() {
            *v = self.draw(rng);
        }
    }

    /// `n` i.i.d. draws from `ν^d`, one per row.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        mc::require_samples(n, 1)?;
        mc::try_par_rows(n, self.dim, seed, |rng, row| {
            self.fill(rng, row);
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean_is_one_half() {
        let s = ReferenceMeasure::uniform(2).sample(100_000, 7).unwrap();
        for c in 0..2 {
            let m = s.column(c).mean().unwrap();
            assert!((0.497..=0.503).contains(&m), "mean {m}");
        }
        assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = ReferenceMeasure::uniform(1);
        assert_eq!(r.sample(3, 42).unwrap(), r.sample(3, 42).unwrap());
        assert_ne!(r.sample(3, 42).unwrap(), r.sample(3, 43).unwrap());
    }

    #[test]
    fn normal_has_unit_variance() {
        let s = ReferenceMeasure::normal(4).sample(100_000, 1).unwrap();
        for c in 0..4 {
            let v = s.column(c).var(1.0);
            assert!((0.98..=1.02).contains(&v), "variance {v}");
        }
    }

    #[test]
    fn coordinates_are_uncorrelated() {
        let s = ReferenceMeasure::normal(3).sample(100_000, 5).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let corr = (&s.column(a) * &s.column(b)).mean().unwrap();
                assert!(corr.abs() < 0.015, "corr {corr}");
            }
        }
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(matches!(
            ReferenceMeasure::uniform(2).sample(0, 0),
            Err(Error::EmptySample { .. })
        ));
        assert!(ReferenceMeasure::new(ReferenceKind::UniformUnitCube, 0).is_err());
    }
}
