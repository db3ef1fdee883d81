//! The two-dimensional Bernstein example.
//!
//! `T_1(z_1) = ∫_0^{z_1} Σ_i β_i B_i^5`, `T_2(z_1, z_2) = ∫_0^{z_2} Σ_i β̃_i(z_1) B_i^2`,
//! with each `β̃_i` a degree-8 Bernstein combination in `z_1`. This module
//! builds the map, its `L_12` landscape over `(z_1, z_1')`, the bad-set
//! trade-off curve, and writes plot-ready files.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{certify, CertificateInput};
use crate::dependency::{OscillationVector, ScaleMode};
use crate::transport::{
    pushforward_sample, AxisBox, ComponentSpec, MapFile, ReferenceMeasure, TriangularMap, DEFAULT_TOL,
    MAP_SCHEMA_VERSION,
};
use crate::{Error, Result};

pub const T1_DEGREE: usize = 5;
pub const T2_DEGREES: [usize; 2] = [8, 2];

/// Density coefficients of `T_1` for the shipped preset. Small entries make
/// `T_1` flat, which is where the first data coordinate piles up.
pub const PRESET_BETA: [f64; 6] = [1.8, 0.1, 1.8, 1.8, 0.1, 1.8];

/// Rows `k = 0..=8` of the `β̃` tensor (coefficient of `B_k^8(z_1)`), each a
/// density over `z_2`. Row 0 puts its mass at the top of `[0, 1]` and all
/// others at the bottom, so `T_2` swings quickly in `z_1` near `z_1 = 0`
/// and the landscape has a narrow ridge there.
pub const PRESET_BETA_TILDE: [[f64; 3]; 9] = [
    [0.02, 0.02, 2.96],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
    [2.96, 0.02, 0.02],
];

/// Map file of the shipped multimodal preset.
pub fn preset_file() -> MapFile {
    toy_file(PRESET_BETA.to_vec(), PRESET_BETA_TILDE.concat())
}

/// Map file with constant coefficients: the identity.
pub fn uniform_file() -> MapFile {
    toy_file(vec![1.0; T1_DEGREE + 1], vec![1.0; 27])
}

fn toy_file(beta: Vec<f64>, beta_tilde: Vec<f64>) -> MapFile {
    MapFile {
        schema_version: MAP_SCHEMA_VERSION,
        dimension: 2,
        components: vec![
            ComponentSpec::Bernstein {
                degrees: vec![T1_DEGREE],
                coefficients: beta,
            },
            ComponentSpec::Bernstein {
                degrees: T2_DEGREES.to_vec(),
                coefficients: beta_tilde,
            },
        ],
    }
}

/// Builds the toy map, checking the degree layout.
pub fn build_toy_map(spec: &MapFile) -> Result<TriangularMap> {
    let expect: [&[usize]; 2] = [&[T1_DEGREE], &T2_DEGREES];
    if spec.dimension != 2 || spec.components.len() != 2 {
        return Err(Error::Coefficients("the toy map is two-dimensional".into()));
    }
    for (k, (c, want)) in spec.components.iter().zip(expect).enumerate() {
        match c {
            ComponentSpec::Bernstein { degrees, .. } if degrees.as_slice() == want => {}
            _ => {
                return Err(Error::Coefficients(format!(
                    "toy component {} must be Bernstein with degrees {:?}",
                    k + 1,
                    want
                )))
            }
        }
    }
    spec.build()
}

/// `E_τ|T_2(z_1, τ) - T_2(z_1', τ)| / |z_1 - z_1'|` on a regular grid of `z_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyLandscape {
    pub z1: Vec<f64>,
    /// Symmetric; the diagonal holds the averaged `|∂T_2/∂z_1|`.
    pub values: Array2<f64>,
}

impl ToyLandscape {
    pub fn row_max(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().cloned().fold(0.0, f64::max))
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Grid rows kept by `cap`.
    pub fn good_rows(&self, cap: f64) -> Vec<bool> {
        self.row_max().into_iter().map(|m| m <= cap).collect()
    }

    /// Largest entry among pairs of good rows (0 when none are good).
    pub fn restricted_max(&self, cap: f64) -> f64 {
        let good = self.good_rows(cap);
        self.values
            .indexed_iter()
            .filter(|((a, b), _)| good[*a] && good[*b])
            .map(|(_, &v)| v)
            .fold(0.0, f64::max)
    }

    /// Good set in reference space: `z_1`-cells around good rows, times `[0, 1]`.
    pub fn good_boxes(&self, cap: f64) -> Vec<AxisBox> {
        let g = self.z1.len();
        let half = 0.5 / (g - 1) as f64;
        self.good_rows(cap)
            .into_iter()
            .enumerate()
            .filter(|(_, ok)| *ok)
            .map(|(a, _)| {
                let c = self.z1[a];
                AxisBox::new(vec![((c - half).max(0.0), (c + half).min(1.0)), (0.0, 1.0)])
            })
            .collect()
    }

    fn row_of(&self, z1: f64) -> usize {
        let g = self.z1.len();
        ((z1.clamp(0.0, 1.0) * (g - 1) as f64).round() as usize).min(g - 1)
    }
}

/// Step of the symmetric difference used on the diagonal.
const DIAGONAL_STEP: f64 = 1e-5;

/// `G × G` landscape of the second component over `z_1` with common draws `τ`.
pub fn l12_landscape(map: &TriangularMap, grid: usize, n_mc: usize, seed: u64) -> Result<ToyLandscape> {
    if map.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: map.dim(),
        });
    }
    if grid < 2 {
        return Err(Error::Parameter("landscape grid needs at least two points".into()));
    }
    crate::mc::require_samples(n_mc, 1)?;
    let tau: Vec<f64> = ReferenceMeasure::uniform(1)
        .sample(n_mc, seed)?
        .into_raw_vec_and_offset()
        .0;
    let z1: Vec<f64> = (0..grid).map(|a| a as f64 / (grid - 1) as f64).collect();
    let t2 = |z: f64| -> Vec<f64> { tau.iter().map(|&t| map.eval_prefix(&[z, t])[1]).collect() };
    let outputs: Vec<Vec<f64>> = z1.par_iter().map(|&z| t2(z)).collect();
    let mean_abs = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n_mc as f64;

    let diagonal: Vec<f64> = z1
        .par_iter()
        .map(|&z| {
            let (lo, hi) = ((z - DIAGONAL_STEP).max(0.0), (z + DIAGONAL_STEP).min(1.0));
            mean_abs(&t2(hi), &t2(lo)) / (hi - lo)
        })
        .collect();
    let upper: Vec<(usize, usize, f64)> = (0..grid)
        .into_par_iter()
        .flat_map_iter(|a| ((a + 1)..grid).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, mean_abs(&outputs[a], &outputs[b]) / (z1[b] - z1[a])))
        .collect();
    let mut values = Array2::zeros((grid, grid));
    for (a, v) in diagonal.into_iter().enumerate() {
        values[[a, a]] = v;
    }
    for (a, b, v) in upper {
        values[[a, b]] = v;
        values[[b, a]] = v;
    }
    Ok(ToyLandscape { z1, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub cap: f64,
    pub xi: f64,
}

/// For each cap, the fraction of `n` pushforward samples whose `z_1` falls in
/// a landscape row with maximum above the cap.
pub fn badset_tradeoff(
    landscape: &ToyLandscape,
    map: &TriangularMap,
    reference: &ReferenceMeasure,
    caps: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<TradeoffPoint>> {
    if caps.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Parameter("caps must be sorted ascending".into()));
    }
    let x = pushforward_sample(map, reference, n, seed)?;
    let rows: Vec<usize> = x
        .rows()
        .into_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|r| Ok(landscape.row_of(map.invert_prefix(&[r[0]], DEFAULT_TOL)?[0])))
        .collect::<Result<_>>()?;
    let row_max = landscape.row_max();
    let mut per_row = vec![0usize; row_max.len()];
    for r in rows {
        per_row[r] += 1;
    }
    Ok(caps
        .iter()
        .map(|&cap| {
            let bad: usize = per_row
                .iter()
                .zip(&row_max)
                .filter(|(_, m)| **m > cap)
                .map(|(c, _)| c)
                .sum();
            TradeoffPoint {
                cap,
                xi: bad as f64 / n as f64,
            }
        })
        .collect())
}

/// Certificate terms used to compare caps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementContext {
    pub m: usize,
    pub kl: f64,
    pub delta: f64,
    pub rho_norm: f64,
    pub osc: Vec<f64>,
    pub mode: ScaleMode,
}

impl Default for ImprovementContext {
    fn default() -> Self {
        ImprovementContext {
            m: 100,
            kl: 5.0,
            delta: 0.05,
            rho_norm: 1.0,
            osc: vec![0.5, 0.5],
            mode: ScaleMode::Paper,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapObjective {
    pub cap: f64,
    pub xi: f64,
    pub gap: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Improvement {
    pub context: ImprovementContext,
    /// Gap with `L_12` at the landscape maximum and no exclusion.
    pub baseline_gap: f64,
    pub best: CapObjective,
    pub improves: bool,
    pub per_cap: Vec<CapObjective>,
}

fn gap_with_l12(l12: f64, ctx: &ImprovementContext) -> Result<f64> {
    let mut l = Array2::zeros((2, 2));
    l[[0, 1]] = l12;
    let input = CertificateInput::from_l(
        &l,
        ctx.m,
        ctx.rho_norm,
        OscillationVector::new(ctx.osc.clone())?,
        ctx.kl,
        ctx.delta,
        0.0,
        0.0,
    )?;
    Ok(certify(&input, ctx.mode)?.gap)
}

/// `gap(cap) + ξ̂(cap)` for every point of the trade-off curve against the
/// no-exclusion gap.
pub fn certificate_improvement(
    landscape: &ToyLandscape,
    tradeoff: &[TradeoffPoint],
    ctx: &ImprovementContext,
) -> Result<Improvement> {
    let baseline_gap = gap_with_l12(landscape.max(), ctx)?;
    let per_cap = tradeoff
        .iter()
        .map(|p| {
            let gap = gap_with_l12(p.cap.min(landscape.max()), ctx)?;
            Ok(CapObjective {
                cap: p.cap,
                xi: p.xi,
                gap,
                objective: gap + p.xi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = per_cap
        .iter()
        .cloned()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .ok_or_else(|| Error::Parameter("empty trade-off curve".into()))?;
    Ok(Improvement {
        context: ctx.clone(),
        baseline_gap,
        improves: best.objective < baseline_gap,
        best,
        per_cap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub grid: usize,
    pub n_mc: usize,
    pub seed: u64,
    /// Pushforward samples behind the trade-off curve.
    pub n_tradeoff: usize,
    /// Points in the scatter file.
    pub n_scatter: usize,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            grid: 64,
            n_mc: 4096,
            seed: 0,
            n_tradeoff: 100_000,
            n_scatter: 5000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ToyResults {
    pub params: Option<ToyParams>,
    pub map: Option<MapFile>,
    pub landscape: Option<ToyLandscape>,
    pub tradeoff: Vec<TradeoffPoint>,
    pub scatter: Option<Array2<f64>>,
    pub improvement: Option<Improvement>,
}

impl ToyResults {
    pub fn is_empty(&self) -> bool {
        self.landscape.is_none() && self.tradeoff.is_empty() && self.scatter.is_none()
    }
}

/// Caps at every distinct landscape row maximum, plus zero.
pub fn default_caps(landscape: &ToyLandscape) -> Vec<f64> {
    let mut caps = landscape.row_max();
    caps.push(0.0);
    caps.sort_by(f64::total_cmp);
    caps.dedup();
    caps
}

/// The whole experiment for one map.
pub fn run_toy(spec: &MapFile, params: &ToyParams, ctx: &ImprovementContext) -> Result<ToyResults> {
    use crate::mc::derive_seed;
    let map = build_toy_map(spec)?;
    let reference = ReferenceMeasure::uniform(2);
    let landscape = l12_landscape(&map, params.grid, params.n_mc, derive_seed(params.seed, 0))?;
    let caps = default_caps(&landscape);
    let tradeoff = badset_tradeoff(
        &landscape,
        &map,
        &reference,
        &caps,
        params.n_tradeoff,
        derive_seed(params.seed, 1),
    )?;
    let scatter = pushforward_sample(&map, &reference, params.n_scatter, derive_seed(params.seed, 2))?;
    let improvement = certificate_improvement(&landscape, &tradeoff, ctx)?;
    Ok(ToyResults {
        params: Some(params.clone()),
        map: Some(spec.clone()),
        landscape: Some(landscape),
        tradeoff,
        scatter: Some(scatter),
        improvement: Some(improvement),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    files: Vec<String>,
    params: Option<&'a ToyParams>,
    map: Option<&'a MapFile>,
    landscape_max: Option<f64>,
    landscape_symmetric: Option<bool>,
    tradeoff_monotone: bool,
    certificate_improvement: Option<&'a Improvement>,
    warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub const LANDSCAPE_CSV: &str = "landscape.csv";
pub const TRADEOFF_CSV: &str = "tradeoff.csv";
pub const SCATTER_CSV: &str = "scatter.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Writes `landscape.csv`, `tradeoff.csv`, `scatter.csv` and `manifest.json`.
pub fn emit_figures(results: &ToyResults, out_dir: &Path) -> Result<Emitted> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    if results.is_empty() {
        warnings.push("no results to write; manifest only".to_string());
    }
    if let Some(l) = &results.landscape {
        let mut w = csv::Writer::from_path(out_dir.join(LANDSCAPE_CSV))?;
        w.write_record(["z1", "z1p", "L12"])?;
        for ((a, b), v) in l.values.indexed_iter() {
            w.write_record([l.z1[a].to_string(), l.z1[b].to_string(), v.to_string()])?;
        }
        w.flush()?;
        files.push(LANDSCAPE_CSV.to_string());
    }
    if !results.tradeoff.is_empty() {
        let mut w = csv::Writer::from_path(out_dir.join(TRADEOFF_CSV))?;
        w.write_record(["cap", "xi"])?;
        for p in &results.tradeoff {
            w.write_record([p.cap.to_string(), p.xi.to_string()])?;
        }
        w.flush()?;
        files.push(TRADEOFF_CSV.to_string());
    }
    if let Some(s) = &results.scatter {
        let mut w = csv::Writer::from_path(out_dir.join(SCATTER_CSV))?;
        w.write_record(["x1", "x2"])?;
        for r in s.rows() {
            w.write_record([r[0].to_string(), r[1].to_string()])?;
        }
        w.flush()?;
        files.push(SCATTER_CSV.to_string());
    }
    let manifest = Manifest {
        files: files.clone(),
        params: results.params.as_ref(),
        map: results.map.as_ref(),
        landscape_max: results.landscape.as_ref().map(ToyLandscape::max),
        landscape_symmetric: results.landscape.as_ref().map(|l| l.values == l.values.t()),
        tradeoff_monotone: results.tradeoff.windows(2).all(|w| w[1].xi <= w[0].xi),
        certificate_improvement: results.improvement.as_ref(),
        warnings: warnings.clone(),
    };
    fs::write(
        out_dir.join(MANIFEST_JSON),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    files.push(MANIFEST_JSON.to_string());
    Ok(Emitted {
        files: files.into_iter().map(|f| out_dir.join(f)).collect(),
        warnings,
    })
}

/// Local maxima of a 3×3 box-blurred `bins × bins` histogram on `[0, 1]²`
/// that dominate a radius-5 neighbourhood and exceed 1.25 × the mean count.
pub fn count_modes(points: &Array2<f64>, bins: usize) -> usize {
    let mut h = Array2::<f64>::zeros((bins, bins));
    for r in points.rows() {
        let a = ((r[0] * bins as f64) as usize).min(bins - 1);
        let b = ((r[1] * bins as f64) as usize).min(bins - 1);
        h[[a, b]] += 1.0;
    }
    let blurred = Array2::from_shape_fn((bins, bins), |(a, b)| {
        let mut s = 0.0;
        let mut n = 0.0;
        for da in -1i64..=1 {
            for db in -1i64..=1 {
                let (x, y) = (a as i64 + da, b as i64 + db);
                if x >= 0 && y >= 0 && (x as usize) < bins && (y as usize) < bins {
                    s += h[[x as usize, y as usize]];
                    n += 1.0;
                }
            }
        }
        s / n
    });
    let mean = blurred.mean().unwrap_or(0.0);
    let radius = 5i64;
    blurred
        .indexed_iter()
        .filter(|((a, b), &v)| {
            v > 1.25 * mean
                && (-radius..=radius).all(|da| {
                    (-radius..=radius).all(|db| {
                        let (x, y) = (*a as i64 + da, *b as i64 + db);
                        if (da, db) == (0, 0) || x < 0 || y < 0 || x as usize >= bins || y as usize >= bins {
                            return true;
                        }
                        let w = blurred[[x as usize, y as usize]];
                        // ties broken toward the lexicographically first cell
                        w < v || (w == v && (x, y) > (*a as i64, *b as i64))
                    })
                })
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic};
    use crate::transport::{AffineComponent, Component};

    #[test]
    fn uniform_coefficients_give_identity() {
        let map = build_toy_map(&uniform_file()).unwrap();
        for z in [[0.1, 0.2], [0.5, 0.5], [0.93, 0.07]] {
            let x = map.forward(&z).unwrap();
            assert!((x[0] - z[0]).abs() < 1e-14 && (x[1] - z[1]).abs() < 1e-14);
        }
        let s = pushforward_sample(&map, &ReferenceMeasure::uniform(2), 20_000, 3).unwrap();
        for k in 0..2 {
            let col: Vec<f64> = s.column(k).to_vec();
            assert!(ks_statistic(&col, |x| x.clamp(0.0, 1.0)) < ks_critical(col.len(), 0.01));
        }
    }

    #[test]
    fn wrong_degrees_rejected() {
        let mut f = preset_file();
        if let ComponentSpec::Bernstein { degrees, .. } = &mut f.components[1] {
            *degrees = vec![2, 8];
        }
        assert!(build_toy_map(&f).is_err());
        let mut f = preset_file();
        if let ComponentSpec::Bernstein { degrees, coefficients } = &mut f.components[0] {
            *degrees = vec![4];
            coefficients.pop();
        }
        assert!(build_toy_map(&f).is_err());
        let mut f = preset_file();
        if let ComponentSpec::Bernstein { coefficients, .. } = &mut f.components[0] {
            coefficients[0] = -1.0;
        }
        assert!(build_toy_map(&f).is_err());
    }

    #[test]
    fn identity_landscape_is_zero() {
        let map = build_toy_map(&uniform_file()).unwrap();
        let l = l12_landscape(&map, 8, 256, 1).unwrap();
        assert!(l.values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn linear_coupling_landscape() {
        let map = TriangularMap::new(vec![
            Component::Affine(AffineComponent::new(vec![1.0], 0.0).unwrap()),
            Component::Affine(AffineComponent::new(vec![0.5, 0.5], 0.0).unwrap()),
        ])
        .unwrap();
        let l = l12_landscape(&map, 9, 128, 1).unwrap();
        assert!(l.values.iter().all(|v| (v - 0.5).abs() < 0.01));
    }

    #[test]
    fn preset_landscape_symmetric_and_capped() {
        let map = build_toy_map(&preset_file()).unwrap();
        let l = l12_landscape(&map, 24, 512, 5).unwrap();
        assert_eq!(l.values, l.values.t());
        for cap in default_caps(&l) {
            assert!(l.restricted_max(cap) <= cap);
        }
    }

    #[test]
    fn tradeoff_shape() {
        let map = build_toy_map(&preset_file()).unwrap();
        let r = ReferenceMeasure::uniform(2);
        let l = l12_landscape(&map, 16, 256, 2).unwrap();
        let caps = default_caps(&l);
        let t = badset_tradeoff(&l, &map, &r, &caps, 4000, 3).unwrap();
        assert_eq!(t[0].xi, 1.0);
        assert_eq!(t.last().unwrap().xi, 0.0);
        assert!(t.windows(2).all(|w| w[1].xi <= w[0].xi));
        assert!(badset_tradeoff(&l, &map, &r, &[1.0, 0.5], 10, 3).is_err());
    }

    #[test]
    fn emit_manifest_only_when_empty() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_figures(&ToyResults::default(), dir.path()).unwrap();
        assert_eq!(e.files.len(), 1);
        assert_eq!(e.warnings.len(), 1);
        assert!(dir.path().join(MANIFEST_JSON).exists());
    }

    #[test]
    fn mode_counter() {
        let mut pts = Array2::zeros((2000, 2));
        for k in 0..2000 {
            let c = if k % 2 == 0 { 0.25 } else { 0.75 };
            let t = (k as f64 * 0.618_033_988_7).fract() * 0.1;
            pts[[k, 0]] = c + t - 0.05;
            pts[[k, 1]] = 0.5 + ((k as f64 * 0.414_213_562_3).fract() - 0.5) * 0.1;
        }
        assert_eq!(count_modes(&pts, 50), 2);
    }
}
