//! The PAC-Bayesian risk certificate
//!
//! `E_ζ R(ζ) ≤ E_ζ R_m(ζ) + 2 s ‖D δ̃‖₂ sqrt((ln(1/δ) + KL) / (2m)) + ξ`,
//!
//! with `s = ‖ρ‖/d` (`ScaleMode::Paper`) or `s = ‖ρ‖` (`ScaleMode::Conservative`), together with
//! the temperature schedule used in its proof, a shipped affine hypothesis
//! family, and a coverage simulation on the two-dimensional toy task.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dependency::{build_d, Metric, MetricKind, OscillationVector, ScaleMode};
use crate::mc::{self, McRng};
use crate::stats::normal_cdf;
use crate::transport::{PointMap, ReferenceMeasure};
use crate::{Error, Result};

/// Upper end of the admissible confidence range, `exp(-1/e)`.
pub fn max_confidence() -> f64 {
    (-(-1.0f64).exp()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossKind {
    /// `min(1, |ŷ - y|)`.
    ClippedAbsolute,
    /// `1{|ŷ - y| > threshold}`.
    ZeroOneThreshold { threshold: f64 },
    /// `ℓ ≡ 0`.
    Zero,
}

impl LossKind {
    pub fn eval(self, yhat: f64, y: f64) -> f64 {
        match self {
            LossKind::ClippedAbsolute => (yhat - y).abs().min(1.0),
            LossKind::ZeroOneThreshold { threshold } => f64::from((yhat - y).abs() > threshold),
            LossKind::Zero => 0.0,
        }
    }

    /// Lipschitz constant in `(ŷ, y)` under the sum metric.
    pub fn lipschitz(self) -> f64 {
        match self {
            LossKind::ClippedAbsolute => 1.0,
            LossKind::ZeroOneThreshold { .. } => f64::INFINITY,
            LossKind::Zero => 0.0,
        }
    }

    pub fn range(self) -> f64 {
        match self {
            LossKind::Zero => 0.0,
            _ => 1.0,
        }
    }
}

/// Affine predictors `ŷ_i = clip(w x_i + b, 0, 1)` on sites `Z = X × Y`,
/// `X = Y = [0, 1]`, with `|w| ≤ W`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisClassSpec {
    pub w_bound: f64,
    pub loss: LossKind,
}

impl HypothesisClassSpec {
    pub fn new(w_bound: f64, loss: LossKind) -> Result<Self> {
        if !(w_bound >= 0.0) {
            return Err(Error::Parameter(format!("W must be nonnegative, got {w_bound}")));
        }
        Ok(HypothesisClassSpec { w_bound, loss })
    }

    pub fn predict(theta: &[f64], x: f64) -> f64 {
        (theta[0] * x + theta[1]).clamp(0.0, 1.0)
    }

    /// Mean pointwise loss of one structure.
    pub fn structure_loss(&self, theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let d = x.len() as f64;
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| self.loss.eval(Self::predict(theta, xi), yi))
            .sum::<f64>()
            / d
    }

    /// Same, on a flattened structure `(x_1, y_1, …, x_d, y_d)`.
    pub fn flat_loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        let d = z.len() / 2;
        (0..d)
            .map(|i| self.loss.eval(Self::predict(theta, z[2 * i]), z[2 * i + 1]))
            .sum::<f64>()
            / d as f64
    }
}

/// Analytic bound on the oscillation vector of `z ↦ ℓ(φ_θ(z))`, uniformly over
/// the class. The good set cannot enlarge it, so it is accepted for interface
/// symmetry only.
pub fn oscillation_vector(
    class: &HypothesisClassSpec,
    d: usize,
    metric: &Metric,
    _good: Option<&crate::transport::GoodSetSpec>,
) -> Result<OscillationVector> {
    if d == 0 {
        return Err(Error::Parameter("structure size must be positive".into()));
    }
    if class.loss == LossKind::Zero {
        return OscillationVector::constant(d, 0.0);
    }
    let per_site = match metric.kind {
        MetricKind::Discrete => class.loss.range(),
        MetricKind::ComponentSum | MetricKind::AbsoluteDifference => {
            if !class.w_bound.is_finite() {
                return Err(Error::Unbounded("W is infinite".into()));
            }
            let lip = class.loss.lipschitz();
            if !lip.is_finite() {
                return Err(Error::Unbounded("discontinuous loss under a continuous metric".into()));
            }
            lip * class.w_bound.max(1.0)
        }
    };
    OscillationVector::constant(d, per_site / d as f64)
}

/// Diagonal Gaussian over `θ = (w, b)`. A zero variance is a point mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPredictorDist {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianPredictorDist {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: var.len(),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) || var.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter(
                "Gaussian needs finite means and nonnegative variances".into(),
            ));
        }
        Ok(GaussianPredictorDist { mean, var })
    }

    pub fn point_mass(mean: Vec<f64>) -> Self {
        let var = vec![0.0; mean.len()];
        GaussianPredictorDist { mean, var }
    }

    pub fn standard(dim: usize) -> Self {
        GaussianPredictorDist {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn draw(&self, rng: &mut McRng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.var)
            .map(|(m, v)| {
                let e: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * e
            })
            .collect()
    }

    /// Probability that `|w| > W` (first coordinate).
    pub fn mass_outside(&self, w_bound: f64) -> f64 {
        let (m, v) = (self.mean[0], self.var[0]);
        if v == 0.0 {
            return f64::from(m.abs() > w_bound);
        }
        let s = v.sqrt();
        normal_cdf((-w_bound - m) / s) + normal_cdf((m - w_bound) / s)
    }
}

/// `KL(posterior ‖ prior)` for diagonal Gaussians.
pub fn kl_gaussian(posterior: &GaussianPredictorDist, prior: &GaussianPredictorDist) -> Result<f64> {
    if posterior.dim() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: posterior.dim(),
        });
    }
    if prior.var.iter().any(|&v| v <= 0.0) {
        return Err(Error::Parameter("prior variances must be positive".into()));
    }
    let mut kl = 0.0;
    for k in 0..prior.dim() {
        let (mq, vq) = (posterior.mean[k], posterior.var[k]);
        let (mp, vp) = (prior.mean[k], prior.var[k]);
        if vq == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += 0.5 * (vq / vp + (mq - mp).powi(2) / vp - 1.0 + (vp / vq).ln());
    }
    Ok(kl.max(0.0))
}

/// `m` structures of `d` sites: inputs `x` and labels `y`, both `m × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredData {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl StructuredData {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::Shape(format!("x is {:?} but y is {:?}", x.dim(), y.dim())));
        }
        Ok(StructuredData { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn structure_size(&self) -> usize {
        self.x.ncols()
    }
}

/// `E_{θ∼ζ} (1/m) Σ_k (1/d) Σ_i ℓ(φ_θ(X^k)_i, Y^k_i)` over `n_theta` draws.
pub fn empirical_risk(
    posterior: &GaussianPredictorDist,
    data: &StructuredData,
    class: &HypothesisClassSpec,
    n_theta: usize,
    seed: u64,
) -> Result<f64> {
    mc::require_samples(data.len(), 1)?;
    mc::require_samples(n_theta, 1)?;
    let risk_at = |theta: &[f64]| {
        data.x
            .rows()
            .into_iter()
            .zip(data.y.rows())
            .map(|(x, y)| class.structure_loss(theta, x.as_slice().unwrap(), y.as_slice().unwrap()))
            .sum::<f64>()
            / data.len() as f64
    };
    if posterior.var.iter().all(|&v| v == 0.0) {
        return Ok(risk_at(&posterior.mean));
    }
    let sums = mc::par_chunks(n_theta, 256, seed, |rng, range| {
        range.map(|_| risk_at(&posterior.draw(rng))).sum::<f64>()
    });
    Ok(sums.iter().sum::<f64>() / n_theta as f64)
}

/// Inputs of the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateInput {
    pub m: usize,
    pub d: usize,
    pub rho_norm: f64,
    /// `D`, any nonnegative `d × d` matrix.
    pub dmat: Vec<Vec<f64>>,
    pub osc: OscillationVector,
    pub kl: f64,
    pub delta: f64,
    pub xi: f64,
    pub empirical_risk: f64,
}

impl CertificateInput {
    pub fn validate(&self) -> Result<Array2<f64>> {
        if !(self.delta > 0.0 && self.delta < max_confidence()) {
            return Err(Error::ConfidenceRange(self.delta));
        }
        mc::require_samples(self.m, 1)?;
        if self.d == 0 {
            return Err(Error::Parameter("structure size must be positive".into()));
        }
        let dmat = crate::dependency::from_rows(&self.dmat)?;
        if dmat.dim() != (self.d, self.d) {
            return Err(Error::Shape(format!(
                "D is {:?}, expected {}×{}",
                dmat.dim(),
                self.d,
                self.d
            )));
        }
        if dmat.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("D entries must be finite and nonnegative".into()));
        }
        if self.osc.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.osc.len(),
            });
        }
        for (name, v) in [
            ("rho_norm", self.rho_norm),
            ("kl", self.kl),
            ("xi", self.xi),
            ("empirical_risk", self.empirical_risk),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(dmat)
    }

    /// Input with `D` built from a strictly upper triangular `L`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_l(
        l: &Array2<f64>,
        m: usize,
        rho_norm: f64,
        osc: OscillationVector,
        kl: f64,
        delta: f64,
        xi: f64,
        empirical_risk: f64,
    ) -> Result<Self> {
        let d = build_d(l)?;
        Ok(CertificateInput {
            m,
            d: d.nrows(),
            rho_norm,
            dmat: crate::dependency::rows(&d),
            osc,
            kl,
            delta,
            xi,
            empirical_risk,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaStep {
    pub j: usize,
    pub delta_j: f64,
    pub beta_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub empirical_risk: f64,
    pub gap: f64,
    pub xi: f64,
    pub scale: f64,
    pub d_delta_norm: f64,
    pub gamma_delta_norm: f64,
    pub kl: f64,
    pub log_inv_delta: f64,
    pub m: usize,
    pub d: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: ScaleMode,
    pub gap: f64,
    /// `R_m + gap + ξ`, unclamped.
    pub total: f64,
    /// `total` clamped to `[0, 1 + ξ]`.
    pub total_clamped: f64,
    pub vacuous: bool,
    pub breakdown: Breakdown,
    /// `(δ_j, β_j)` for `j = 0..=j*`; empty when `‖Γδ̃‖ = 0`.
    pub beta_schedule: Vec<BetaStep>,
    pub j_star: usize,
    pub beta_star: Option<f64>,
    pub beta_j_star: Option<f64>,
    /// Gap of the fixed-temperature bound at `β*`; half the uniform gap.
    pub oracle_gap: f64,
}

/// Evaluates the certificate.
pub fn certify(input: &CertificateInput, mode: ScaleMode) -> Result<CertificateReport> {
    let dmat = input.validate()?;
    let scale = mode.factor(input.rho_norm, input.d);
    let dd = dmat.dot(&Array1::from(input.osc.values().to_vec()));
    let d_delta_norm = dd.dot(&dd).sqrt();
    let gamma_delta_norm = scale * d_delta_norm;
    let log_inv_delta = (1.0 / input.delta).ln();
    let complexity = log_inv_delta + input.kl;
    let m = input.m as f64;
    let gap = 2.0 * scale * d_delta_norm * (complexity / (2.0 * m)).sqrt();
    let total = input.empirical_risk + gap + input.xi;
    let j_star = j_star(input.kl, input.delta)?;
    let (beta_schedule, beta_star, beta_j_star, oracle_gap) = if gamma_delta_norm > 0.0 {
        let schedule = beta_schedule(input.delta, input.m, gamma_delta_norm, j_star)?;
        let bs = (8.0 * m * complexity).sqrt() / gamma_delta_norm;
        let oracle = bs / (8.0 * m) * gamma_delta_norm.powi(2) + complexity / bs;
        let bj = schedule[j_star].beta_j;
        (schedule, Some(bs), Some(bj), oracle)
    } else {
        (Vec::new(), None, None, 0.0)
    };
    Ok(CertificateReport {
        mode,
        gap,
        total,
        total_clamped: total.clamp(0.0, 1.0 + input.xi),
        vacuous: total > 1.0 + input.xi,
        breakdown: Breakdown {
            empirical_risk: input.empirical_risk,
            gap,
            xi: input.xi,
            scale,
            d_delta_norm,
            gamma_delta_norm,
            kl: input.kl,
            log_inv_delta,
            m: input.m,
            d: input.d,
        },
        beta_schedule,
        j_star,
        beta_star,
        beta_j_star,
        oracle_gap,
    })
}

/// `δ_j = δ 2^{-(j+1)}`, `β_j = 2^j sqrt(8 m ln(1/δ)) / ‖Γδ̃‖₂` for `j = 0..=j_max`.
pub fn beta_schedule(delta: f64, m: usize, gamma_delta_norm: f64, j_max: usize) -> Result<Vec<BetaStep>> {
    if !(gamma_delta_norm > 0.0 && gamma_delta_norm.is_finite()) {
        return Err(Error::Parameter(format!(
            "temperature schedule needs a positive norm, got {gamma_delta_norm}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ConfidenceRange(delta));
    }
    let base = (8.0 * m as f64 * (1.0 / delta).ln()).sqrt() / gamma_delta_norm;
    Ok((0..=j_max)
        .map(|j| BetaStep {
            j,
            delta_j: delta * 0.5f64.powi(j as i32 + 1),
            beta_j: base * 2.0f64.powi(j as i32),
        })
        .collect())
}

/// `⌊½ log₂(1 + KL / ln(1/δ))⌋`.
pub fn j_star(kl: f64, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ConfidenceRange(delta));
    }
    if !(kl >= 0.0 && kl.is_finite()) {
        return Err(Error::Parameter(format!("KL must be finite and nonnegative, got {kl}")));
    }
    Ok((0.5 * (1.0 + kl / (1.0 / delta).ln()).log2()).floor() as usize)
}

/// Lipschitz constant of the toy labelling `y = x²` on `[0, 1]`.
pub const LABEL_LIPSCHITZ: f64 = 2.0;

/// Factor taking an input-space `L` to the component-sum metric on `X × Y`
/// when `y` is a function of `x`: `ρ((x, y), (x', y')) ≤ (1 + Lip) |x - x'|`.
pub const SITE_FACTOR: f64 = 1.0 + LABEL_LIPSCHITZ;

/// Structured task on `d` sites: inputs `x = T(u)`, `u ∼ ν`, labels `y_i = x_i²`.
pub struct ToyTask<'a, M: PointMap + ?Sized> {
    pub map: &'a M,
    pub reference: ReferenceMeasure,
}

impl<M: PointMap + ?Sized> ToyTask<'_, M> {
    pub fn label(x: f64) -> f64 {
        x * x
    }

    pub fn sample(&self, m: usize, seed: u64) -> Result<StructuredData> {
        let x = crate::transport::pushforward_sample(self.map, &self.reference, m, seed)?;
        let y = x.mapv(Self::label);
        StructuredData::new(x, y)
    }

    /// Monte Carlo `E_{θ,z} loss` with fresh `(θ, z)` pairs; mean and standard error.
    pub fn true_risk(
        &self,
        posterior: &GaussianPredictorDist,
        class: &HypothesisClassSpec,
        n: usize,
        seed: u64,
    ) -> Result<(f64, f64)> {
        mc::require_samples(n, 2)?;
        let d = self.reference.dim;
        let parts = mc::par_chunks(n, mc::CHUNK_ROWS, seed, |rng, range| -> Result<Vec<f64>> {
            let mut u = vec![0.0; d];
            range
                .map(|_| {
                    let theta = posterior.draw(rng);
                    self.reference.fill(rng, &mut u);
                    let x = self.map.apply(&u)?;
                    let y: Vec<f64> = x.iter().map(|&v| Self::label(v)).collect();
                    Ok(class.structure_loss(&theta, &x, &y))
                })
                .collect()
        });
        let losses: Vec<f64> = parts.into_iter().collect::<Result<Vec<_>>>()?.concat();
        Ok(mc::mean_and_se(&losses))
    }
}

/// Settings of the coverage simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub m: usize,
    pub posteriors: usize,
    pub n_theta: usize,
    pub n_risk: usize,
    pub delta: f64,
    pub w_bound: f64,
    pub mode: ScaleMode,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            m: 200,
            posteriors: 100,
            n_theta: 512,
            n_risk: 100_000,
            delta: 0.05,
            w_bound: 3.0,
            mode: ScaleMode::Paper,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageDraw {
    pub posterior: GaussianPredictorDist,
    pub kl: f64,
    pub empirical_risk: f64,
    pub total: f64,
    pub mc_risk: f64,
    pub mc_std_error: f64,
    pub covered: bool,
    /// Posterior mass with `|w| > W` exceeds `1e-6`.
    pub outside_class: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub l12: f64,
    pub draws: Vec<CoverageDraw>,
    pub covered: usize,
}

/// For random Gaussian posteriors on the toy task, compares the certified total
/// with a Monte Carlo estimate of the true risk. Training data are drawn with no
/// exclusion (`ξ = 0`); `l` is the `L` matrix of the inputs, scaled by
/// [`SITE_FACTOR`] for the site metric.
pub fn toy_coverage<M: PointMap + ?Sized>(
    task: &ToyTask<'_, M>,
    l: &Array2<f64>,
    config: &CoverageConfig,
    seed: u64,
) -> Result<CoverageReport> {
    let d = task.reference.dim;
    let class = HypothesisClassSpec::new(config.w_bound, LossKind::ClippedAbsolute)?;
    let metric = Metric::component_sum(&[1.0, 1.0])?;
    let osc = oscillation_vector(&class, d, &metric, None)?;
    let data = task.sample(config.m, mc::derive_seed(seed, 0))?;
    let prior = GaussianPredictorDist::standard(2);
    let site_l = l * SITE_FACTOR;
    let mut rng = mc::chunk_rng(mc::derive_seed(seed, 1), 0);
    let posteriors: Vec<GaussianPredictorDist> = (0..config.posteriors)
        .map(|_| {
            let mean = vec![rng.random_range(-1.5..1.5), rng.random_range(-0.5..0.5)];
            let var = vec![rng.random_range(0.005..0.2), rng.random_range(0.005..0.2)];
            GaussianPredictorDist { mean, var }
        })
        .collect();
    let mut draws = Vec::with_capacity(posteriors.len());
    for (k, post) in posteriors.into_iter().enumerate() {
        let kl = kl_gaussian(&post, &prior)?;
        let r_m = empirical_risk(
            &post,
            &data,
            &class,
            config.n_theta,
            mc::derive_seed(seed, 100 + k as u64),
        )?;
        let input = CertificateInput::from_l(
            &site_l,
            config.m,
            metric.diameter,
            osc.clone(),
            kl,
            config.delta,
            0.0,
            r_m,
        )?;
        let report = certify(&input, config.mode)?;
        let (mc_risk, se) = task.true_risk(&post, &class, config.n_risk, mc::derive_seed(seed, 10_000 + k as u64))?;
        draws.push(CoverageDraw {
            outside_class: post.mass_outside(config.w_bound) > 1e-6,
            posterior: post,
            kl,
            empirical_risk: r_m,
            total: report.total,
            mc_risk,
            mc_std_error: se,
            covered: report.total >= mc_risk - 3.0 * se,
        });
    }
    Ok(CoverageReport {
        l12: if d > 1 { l[[0, 1]] } else { 0.0 },
        covered: draws.iter().filter(|c| c.covered).count(),
        draws,
    })
}
