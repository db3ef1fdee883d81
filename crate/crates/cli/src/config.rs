//! Per-subcommand configuration files.
//!
//! Every file is TOML (or JSON when the extension is `.json`) and carries
//! `schema_version = 1`. Missing fields take the defaults below. Relative
//! paths inside a config are resolved against the config's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use krcert::certificate::{GaussianPredictorDist, HypothesisClassSpec, LossKind};
use krcert::dependency::ScaleMode;
use krcert::toy::ImprovementContext;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Raw config text plus where it came from.
pub struct Loaded<T> {
    pub value: T,
    pub bytes: Vec<u8>,
    pub dir: PathBuf,
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<Loaded<T>> {
    let Some(path) = path else {
        return Ok(Loaded {
            value: T::default(),
            bytes: Vec::new(),
            dir: PathBuf::from("."),
        });
    };
    let bytes = std::fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let version: Versioned = if json {
        serde_json::from_str(text)?
    } else {
        toml::from_str(text)?
    };
    if version.schema_version != Some(SCHEMA_VERSION) {
        bail!("config {} must set schema_version = {SCHEMA_VERSION}", path.display());
    }
    let value = if json {
        serde_json::from_str(text).with_context(|| format!("invalid config {}", path.display()))?
    } else {
        toml::from_str(text).with_context(|| format!("invalid config {}", path.display()))?
    };
    Ok(Loaded {
        value,
        bytes,
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

#[derive(Deserialize)]
struct Versioned {
    schema_version: Option<u32>,
}

pub fn resolve(dir: &Path, p: &Option<PathBuf>) -> Option<PathBuf> {
    p.as_ref()
        .map(|p| if p.is_absolute() { p.clone() } else { dir.join(p) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub schema_version: u32,
    /// Toy map file; the shipped preset when absent.
    pub map: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: usize,
    pub n_mc: usize,
    pub n_tradeoff: usize,
    pub n_scatter: usize,
    pub improvement: ImprovementContext,
}

impl Default for ToyConfig {
    fn default() -> Self {
        let p = krcert::toy::ToyParams::default();
        ToyConfig {
            schema_version: SCHEMA_VERSION,
            map: None,
            seed: None,
            grid: p.grid,
            n_mc: p.n_mc,
            n_tradeoff: p.n_tradeoff,
            n_scatter: p.n_scatter,
            improvement: ImprovementContext::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzConfig {
    /// Pair-grid size per `(i, j)`.
    pub grid: usize,
    pub n_mc: usize,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig { grid: 64, n_mc: 4096 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub points: usize,
    pub n_mc: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { points: 32, n_mc: 1024 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub schema_version: u32,
    pub map: Option<PathBuf>,
    /// Bad-set candidate file; no exclusion when absent.
    pub candidates: Option<PathBuf>,
    pub seed: Option<u64>,
    pub m: usize,
    pub delta: f64,
    pub mode: ScaleMode,
    /// Total error budget of the candidates.
    pub epsilon: f64,
    /// Sample used to estimate each candidate's bad-set mass.
    pub n_badset: usize,
    pub class: HypothesisClassSpec,
    pub posterior: GaussianPredictorDist,
    pub prior: GaussianPredictorDist,
    pub n_theta: usize,
    /// Fresh draws for a Monte Carlo check of the true risk; 0 skips it.
    pub n_risk: usize,
    pub lipschitz: LipschitzConfig,
    pub probe: ProbeConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            schema_version: SCHEMA_VERSION,
            map: None,
            candidates: None,
            seed: None,
            m: 200,
            delta: 0.05,
            mode: ScaleMode::Paper,
            epsilon: 0.05,
            n_badset: 2000,
            class: HypothesisClassSpec {
                w_bound: 3.0,
                loss: LossKind::ClippedAbsolute,
            },
            posterior: GaussianPredictorDist {
                mean: vec![0.6, 0.0],
                var: vec![0.01, 0.01],
            },
            prior: GaussianPredictorDist::standard(2),
            n_theta: 512,
            n_risk: 100_000,
            lipschitz: LipschitzConfig::default(),
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgfConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub n: usize,
    /// `‖ρ‖` of the coordinate metric.
    pub rho_norm: f64,
}

impl Default for MgfConfig {
    fn default() -> Self {
        MgfConfig {
            schema_version: SCHEMA_VERSION,
            seed: None,
            dims: vec![2, 4, 8],
            lambdas: krcert::concentration::default_lambdas(),
            n: 100_000,
            rho_norm: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepsConfig {
    pub schema_version: u32,
    pub map: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: ScaleMode,
    pub rho_norm: f64,
    pub lipschitz: LipschitzConfig,
}

impl Default for DepsConfig {
    fn default() -> Self {
        DepsConfig {
            schema_version: SCHEMA_VERSION,
            map: None,
            seed: None,
            mode: ScaleMode::Paper,
            rho_norm: 1.0,
            lipschitz: LipschitzConfig::default(),
        }
    }
}

/// Banded candidates generated in place of a candidate file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandedConfig {
    pub caps: Vec<f64>,
    pub bandwidths: Vec<usize>,
    pub weights: Option<Vec<f64>>,
}

impl Default for BandedConfig {
    fn default() -> Self {
        BandedConfig {
            caps: vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            bandwidths: vec![1],
            weights: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BadsetConfig {
    pub schema_version: u32,
    pub map: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub banded: BandedConfig,
    pub seed: Option<u64>,
    pub epsilon: f64,
    pub n: usize,
    pub probe: ProbeConfig,
    pub m: usize,
    pub kl: f64,
    pub delta: f64,
    pub rho_norm: f64,
    /// Oscillation vector; `1/d` per coordinate when absent.
    pub osc: Option<Vec<f64>>,
    pub empirical_risk: f64,
    pub mode: ScaleMode,
}

impl Default for BadsetConfig {
    fn default() -> Self {
        BadsetConfig {
            schema_version: SCHEMA_VERSION,
            map: None,
            candidates: None,
            banded: BandedConfig::default(),
            seed: None,
            epsilon: 0.05,
            n: 2000,
            probe: ProbeConfig::default(),
            m: 100,
            kl: 5.0,
            delta: 0.05,
            rho_norm: 1.0,
            osc: None,
            empirical_risk: 0.0,
            mode: ScaleMode::Paper,
        }
    }
}
