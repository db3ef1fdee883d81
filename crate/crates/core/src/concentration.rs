//! Numerical check of the sub-Gaussian MGF bound
//! `E[exp(λ(f - E f))] ≤ exp(λ² ‖Γ δ(f)‖₂² / 8)` and the matching tail bound.

use std::io::Write;

use ndarray::Array2;
use serde::Serialize;

use crate::dependency::{DependencyMatrix, OscillationVector, ScaleMode};
use crate::transport::{pushforward_sample, rejection_sample, GoodSetSpec, PointMap, ReferenceMeasure};
use crate::{mc, Error, Result};

/// Source of data points for the harness.
pub trait Sampler: Sync {
    fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>>;
}

/// `T♯ν`.
pub struct PushforwardSampler<'a, M: PointMap + ?Sized> {
    pub map: &'a M,
    pub reference: ReferenceMeasure,
}

impl<M: PointMap + ?Sized> Sampler for PushforwardSampler<'_, M> {
    fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        pushforward_sample(self.map, &self.reference, n, seed)
    }
}

/// `T♯(ν|A^c)` by rejection in reference space.
pub struct RejectionSampler<'a, M: PointMap + ?Sized> {
    pub map: &'a M,
    pub reference: ReferenceMeasure,
    pub good: GoodSetSpec,
}

impl<M: PointMap + ?Sized> Sampler for RejectionSampler<'_, M> {
    fn sample(&self, n: usize, seed: u64) -> Result<Array2<f64>> {
        rejection_sample(self.map, &self.reference, &self.good, n, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MgfPoint {
    pub lambda: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Jackknife estimate of the bias from centring at the sample mean.
    pub jackknife_bias: f64,
}

/// Default λ grid `{-5, …, 5}`.
pub fn default_lambdas() -> Vec<f64> {
    (-5..=5).map(f64::from).collect()
}

/// Centered empirical MGF `mean(exp(λ(f(z) - f̄)))` at each λ, with `f̄` the
/// same-sample mean.
pub fn empirical_mgf<F, S>(f: &F, sampler: &S, lambdas: &[f64], n: usize, seed: u64) -> Result<Vec<MgfPoint>>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Sampler + ?Sized,
{
    mc::require_samples(n, 2)?;
    let data = sampler.sample(n, seed)?;
    let values: Vec<f64> = data.rows().into_iter().map(|r| f(r.as_slice().unwrap())).collect();
    Ok(lambdas.iter().map(|&l| mgf_at(&values, l)).collect())
}

fn mgf_at(values: &[f64], lambda: f64) -> MgfPoint {
    let n = values.len() as f64;
    let fbar = values.iter().sum::<f64>() / n;
    let e: Vec<f64> = values.iter().map(|v| (lambda * (v - fbar)).exp()).collect();
    let (estimate, std_error) = mc::mean_and_se(&e);
    // leave-one-out: θ_(-k) = exp(-λ(f̄_(-k) - f̄)) (Σe - e_k)/(n-1)
    let total: f64 = e.iter().sum();
    let loo_mean = values
        .iter()
        .zip(&e)
        .map(|(v, ek)| {
            let shift = (fbar - v) / (n - 1.0);
            (-lambda * shift).exp() * (total - ek) / (n - 1.0)
        })
        .sum::<f64>()
        / n;
    MgfPoint {
        lambda,
        estimate,
        std_error,
        jackknife_bias: (n - 1.0) * (loo_mean - estimate),
    }
}

/// `exp(λ² ‖Γδ‖₂² / 8)`.
pub fn mgf_bound(lambda: f64, gamma: &DependencyMatrix, osc: &OscillationVector) -> Result<f64> {
    Ok(mgf_bound_from_norm(lambda, gamma.gamma_delta_norm_sq(osc)?))
}

pub fn mgf_bound_from_norm(lambda: f64, gamma_delta_sq: f64) -> f64 {
    (lambda * lambda * gamma_delta_sq / 8.0).exp()
}

/// `min(1, 2 exp(-2t² / ‖Γδ‖₂²))`.
pub fn concentration_tail(t: f64, gamma: &DependencyMatrix, osc: &OscillationVector) -> Result<f64> {
    tail_from_norm(t, gamma.gamma_delta_norm_sq(osc)?)
}

pub fn tail_from_norm(t: f64, gamma_delta_sq: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("tail threshold must be nonnegative, got {t}")));
    }
    if gamma_delta_sq <= 0.0 {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    Ok((2.0 * (-2.0 * t * t / gamma_delta_sq).exp()).min(1.0))
}

/// One row of the domination report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationRow {
    pub lambda: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub jackknife_bias: f64,
    pub bound_paper_mode: f64,
    pub bound_conservative_mode: f64,
    /// `empirical ≤ bound + 3·se` for each mode.
    pub holds_paper: bool,
    pub holds_conservative: bool,
}

/// Compares the empirical MGF to both scalings of the bound.
pub fn domination_table<F, S>(
    f: &F,
    sampler: &S,
    deps: &DependencyMatrix,
    osc: &OscillationVector,
    lambdas: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<DominationRow>>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Sampler + ?Sized,
{
    let paper = deps.with_mode(ScaleMode::Paper).gamma_delta_norm_sq(osc)?;
    let conservative = deps.with_mode(ScaleMode::Conservative).gamma_delta_norm_sq(osc)?;
    Ok(empirical_mgf(f, sampler, lambdas, n, seed)?
        .into_iter()
        .map(|p| {
            let bp = mgf_bound_from_norm(p.lambda, paper);
            let bc = mgf_bound_from_norm(p.lambda, conservative);
            DominationRow {
                lambda: p.lambda,
                empirical: p.estimate,
                std_error: p.std_error,
                jackknife_bias: p.jackknife_bias,
                bound_paper_mode: bp,
                bound_conservative_mode: bc,
                holds_paper: p.estimate <= bp + 3.0 * p.std_error,
                holds_conservative: p.estimate <= bc + 3.0 * p.std_error,
            }
        })
        .collect())
}

/// CSV `lambda,empirical,std_error,bound_paper_mode,bound_conservative_mode`.
pub fn write_domination_csv<W: Write>(rows: &[DominationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lambda",
        "empirical",
        "std_error",
        "bound_paper_mode",
        "bound_conservative_mode",
    ])?;
    for r in rows {
        w.write_record([
            r.lambda.to_string(),
            r.empirical.to_string(),
            r.std_error.to_string(),
            r.bound_paper_mode.to_string(),
            r.bound_conservative_mode.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependency::build_gamma;
    use crate::transport::TriangularMap;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    fn mean_f(z: &[f64]) -> f64 {
        z.iter().sum::<f64>() / z.len() as f64
    }

    fn identity_sampler(d: usize) -> (TriangularMap, ReferenceMeasure) {
        (TriangularMap::identity(d), ReferenceMeasure::uniform(d))
    }

    #[test]
    fn lambda_zero_is_exactly_one() {
        let (m, r) = identity_sampler(3);
        let s = PushforwardSampler { map: &m, reference: r };
        let p = empirical_mgf(&mean_f, &s, &[0.0], 1000, 1).unwrap();
        assert_eq!(p[0].estimate, 1.0);
    }

    #[test]
    fn constant_function_is_one() {
        let (m, r) = identity_sampler(2);
        let s = PushforwardSampler { map: &m, reference: r };
        for p in empirical_mgf(&|_: &[f64]| 0.7, &s, &[-3.0, 2.0, 5.0], 500, 1).unwrap() {
            assert_relative_eq!(p.estimate, 1.0, epsilon = 1e-12);
            assert!(p.std_error < 1e-12);
        }
    }

    #[test]
    fn uniform_mean_matches_closed_form() {
        // E exp(λ(U - 1/2)/d) = sinh(λ/2d)/(λ/2d) per coordinate
        let d = 4;
        let lambda = 4.0;
        let x = lambda / (2.0 * d as f64);
        let oracle = (x.sinh() / x).powi(d as i32);
        assert!((oracle - 1.179_7).abs() < 1e-4);
        let (m, r) = identity_sampler(d);
        let s = PushforwardSampler { map: &m, reference: r };
        let p = empirical_mgf(&mean_f, &s, &[lambda], 100_000, 8).unwrap()[0];
        assert!((p.estimate - oracle).abs() < 3.0 * p.std_error + p.jackknife_bias.abs());
    }

    #[test]
    fn too_few_samples() {
        let (m, r) = identity_sampler(1);
        let s = PushforwardSampler { map: &m, reference: r };
        assert!(empirical_mgf(&mean_f, &s, &[1.0], 1, 1).is_err());
    }

    #[test]
    fn mgf_bound_examples() {
        let eye4 = build_gamma(&Array2::eye(4), 1.0, 4, ScaleMode::Conservative).unwrap();
        let osc = OscillationVector::constant(4, 0.25).unwrap();
        assert_eq!(mgf_bound(0.0, &eye4, &osc).unwrap(), 1.0);
        assert_relative_eq!(mgf_bound(4.0, &eye4, &osc).unwrap(), 0.5f64.exp(), epsilon = 1e-14);
        assert_relative_eq!(mgf_bound_from_norm(2.0, 0.25), 1.133_148_453_066_826_4, epsilon = 1e-14);
        for l in [0.5, 1.0, 3.0] {
            assert_eq!(mgf_bound(l, &eye4, &osc).unwrap(), mgf_bound(-l, &eye4, &osc).unwrap());
        }
    }

    #[test]
    fn tail_examples() {
        assert_eq!(tail_from_norm(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            tail_from_norm(1.0, 1.0).unwrap(),
            0.270_670_566_473_225_4,
            epsilon = 1e-15
        );
        assert_eq!(tail_from_norm(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(tail_from_norm(0.3, 1e-300).unwrap(), 0.0);
        assert!(tail_from_norm(-1.0, 1.0).is_err());
    }

    #[test]
    fn domination_csv_header() {
        let (m, r) = identity_sampler(2);
        let s = PushforwardSampler { map: &m, reference: r };
        let deps = build_gamma(&Array2::eye(2), 1.0, 2, ScaleMode::Conservative).unwrap();
        let osc = OscillationVector::constant(2, 0.5).unwrap();
        let rows = domination_table(&mean_f, &s, &deps, &osc, &default_lambdas(), 2000, 3).unwrap();
        assert_eq!(rows.len(), 11);
        let mut buf = Vec::new();
        write_domination_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,empirical,std_error,bound_paper_mode,bound_conservative_mode\n"));
    }
}
