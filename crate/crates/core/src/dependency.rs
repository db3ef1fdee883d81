//! Stability and dependence: local oscillations, couplings induced by a common
//! reference draw, transport Lipschitz constants `L_ij`, and the matrices `D`
//! and `Γ`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mc::{self, McRng};
use crate::transport::{Interval, PointMap, ReferenceMeasure, TriangularMap, DEFAULT_TOL};
use crate::{Error, Result};

/// Pairs closer than this in the varied coordinate are skipped.
pub const DEGENERATE_PAIR_EPS: f64 = 1e-9;

/// How `Γ` is scaled from `D`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// `Γ = (‖ρ‖/d) D`.
    #[default]
    Paper,
    /// `Γ = ‖ρ‖ D`.
    Conservative,
}

impl ScaleMode {
    pub fn factor(self, rho_norm: f64, d: usize) -> f64 {
        match self {
            ScaleMode::Paper => rho_norm / d as f64,
            ScaleMode::Conservative => rho_norm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    AbsoluteDifference,
    Discrete,
    /// Sum of absolute differences over the components of a site (`X × Y`).
    ComponentSum,
}

/// Base metric `ρ` on a single site `Z`, with its diameter `‖ρ‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub diameter: f64,
}

impl Metric {
    pub fn new(kind: MetricKind, diameter: f64) -> Result<Self> {
        if !(diameter.is_finite() && diameter >= 0.0) {
            return Err(Error::Parameter(format!(
                "metric diameter must be finite and nonnegative, got {diameter}"
            )));
        }
        Ok(Metric { kind, diameter })
    }

    /// `|z - z'|` on an interval of the given length.
    pub fn absolute(diameter: f64) -> Self {
        Self::new(MetricKind::AbsoluteDifference, diameter).expect("finite diameter")
    }

    pub fn discrete() -> Self {
        Metric {
            kind: MetricKind::Discrete,
            diameter: 1.0,
        }
    }

    /// Component-sum metric on a product of intervals; the diameter is the sum
    /// of the component diameters.
    pub fn component_sum(diameters: &[f64]) -> Result<Self> {
        Self::new(MetricKind::ComponentSum, diameters.iter().sum())
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            MetricKind::AbsoluteDifference | MetricKind::ComponentSum => {
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
            }
            MetricKind::Discrete => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Local oscillations `δ_1..δ_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OscillationVector(Vec<f64>);

impl OscillationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Parameter(format!(
                "oscillations must be finite and nonnegative, found {v}"
            )));
        }
        Ok(OscillationVector(values))
    }

    pub fn constant(d: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; d])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from(self.0.clone())
    }
}

/// `L`, `D`, `Γ` and the scaling that links them.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyMatrix {
    pub l: Array2<f64>,
    pub d: Array2<f64>,
    pub gamma: Array2<f64>,
    pub mode: ScaleMode,
    pub rho_norm: f64,
    pub dim: usize,
}

#[derive(Serialize, Deserialize)]
struct DependencyJson {
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    mode: ScaleMode,
    rho_norm: f64,
    d_dim: usize,
}

pub(crate) fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    Ok(Array2::from_shape_vec((n, m), rows.concat()).expect("checked shape"))
}

impl DependencyMatrix {
    /// `Γ δ`.
    pub fn apply(&self, osc: &OscillationVector) -> Result<Array1<f64>> {
        if osc.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: osc.len(),
            });
        }
        Ok(self.gamma.dot(&osc.to_array()))
    }

    /// `‖Γ δ‖₂²`.
    pub fn gamma_delta_norm_sq(&self, osc: &OscillationVector) -> Result<f64> {
        Ok(self.apply(osc)?.iter().map(|v| v * v).sum())
    }

    /// The same `D` rescaled under another mode.
    pub fn with_mode(&self, mode: ScaleMode) -> DependencyMatrix {
        let gamma = &self.d * mode.factor(self.rho_norm, self.dim);
        DependencyMatrix {
            gamma,
            mode,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DependencyJson {
            l: rows(&self.l),
            d: rows(&self.d),
            gamma: rows(&self.gamma),
            mode: self.mode,
            rho_norm: self.rho_norm,
            d_dim: self.dim,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: DependencyJson = serde_json::from_str(text)?;
        let l = from_rows(&j.l)?;
        let d = build_d(&l)?;
        build_gamma(&d, j.rho_norm, j.d_dim, j.mode)
    }
}

/// `D_ii = 1`, `D_ij = L_ij` above the diagonal, zero below.
pub fn build_d(l: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, m) = l.dim();
    if n != m || n == 0 {
        return Err(Error::Shape(format!("L must be square and nonempty, got {n}×{m}")));
    }
    let mut d = Array2::<f64>::eye(n);
    for ((i, j), &v) in l.indexed_iter() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Shape(format!("L[{i},{j}] = {v} is not a nonnegative number")));
        }
        if i >= j {
            if v != 0.0 {
                return Err(Error::Shape(format!(
                    "L must be strictly upper triangular; L[{i},{j}] = {v}"
                )));
            }
        } else {
            d[[i, j]] = v;
        }
    }
    Ok(d)
}

/// Scales `D` into `Γ` and packages the triple.
pub fn build_gamma(d: &Array2<f64>, rho_norm: f64, dim: usize, mode: ScaleMode) -> Result<DependencyMatrix> {
    if d.dim() != (dim, dim) {
        return Err(Error::Shape(format!("D is {:?}, expected {dim}×{dim}", d.dim())));
    }
    let mut l = d.clone();
    for ((i, j), v) in l.indexed_iter_mut() {
        if i >= j {
            *v = 0.0;
        }
    }
    Ok(DependencyMatrix {
        l,
        d: d.clone(),
        gamma: d * mode.factor(rho_norm, dim),
        mode,
        rho_norm,
        dim,
    })
}

/// Cyclic neighbourhood matrix: row `i` has ones at `i, i+1, …, i+c-1 (mod d)`.
/// Every row has exactly `c` unit entries.
pub fn cyclic_band(d: usize, c: usize) -> Array2<f64> {
    let mut a = Array2::zeros((d, d));
    for i in 0..d {
        for k in 0..c.min(d) {
            a[[i, (i + k) % d]] = 1.0;
        }
    }
    a
}

/// Paired draws `(F(z_k), G(z_k))` with a shared `z_k ~ ν^d`.
pub fn couple<F, G>(f: &F, g: &G, reference: &ReferenceMeasure, n: usize, seed: u64) -> Result<Array2<f64>>
where
    F: PointMap + ?Sized,
    G: PointMap + ?Sized,
{
    let d = reference.dim;
    for got in [f.dim(), g.dim()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    mc::require_samples(n, 1)?;
    mc::try_par_rows(n, 2 * d, seed, |rng, row| {
        let mut z = vec![0.0; d];
        reference.fill(rng, &mut z);
        row[..d].copy_from_slice(&f.apply(&z)?);
        row[d..].copy_from_slice(&g.apply(&z)?);
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairSampling {
    /// Uniform base point, uniform counterpart for the varied site.
    Random { pairs: usize },
    /// For each random base point, all pairs from a regular grid on the varied
    /// site (`points_per_axis` per component, endpoints included).
    Grid { points_per_axis: usize, bases: usize },
}

/// Evaluation design for [`local_oscillation`].
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationDesign {
    /// Bounded box for every flattened coordinate.
    pub domain: Vec<Interval>,
    /// Coordinates per site (1 for scalar sites, 2 for `X × Y`).
    pub site_width: usize,
    pub sampling: PairSampling,
}

impl OscillationDesign {
    pub fn unit_cube(d: usize, sampling: PairSampling) -> Self {
        OscillationDesign {
            domain: vec![Interval::UNIT; d],
            site_width: 1,
            sampling,
        }
    }
}

/// Sampled sup; always a lower estimate of the true local oscillation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscillationEstimate {
    pub value: f64,
    pub pairs_evaluated: usize,
    pub degenerate_pairs: usize,
    pub is_lower_bound: bool,
}

fn draw_in(rng: &mut McRng, iv: Interval) -> f64 {
    iv.lo + (iv.hi - iv.lo) * rng.random::<f64>()
}

/// Estimates `δ_site(f) = sup |f(z) - f(z')| / ρ(z_site, z'_site)` over pairs
/// that agree outside `site`.
pub fn local_oscillation<F>(
    f: &F,
    site: usize,
    metric: &Metric,
    design: &OscillationDesign,
    seed: u64,
) -> Result<OscillationEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let w = design.site_width;
    if w == 0 || !design.domain.len().is_multiple_of(w) {
        return Err(Error::Shape(
            "domain length must be a multiple of the site width".into(),
        ));
    }
    if site >= design.domain.len() / w {
        return Err(Error::Parameter(format!("site {site} out of range")));
    }
    if design.domain.iter().any(|iv| !iv.is_bounded()) {
        return Err(Error::Parameter("oscillation designs need a bounded domain".into()));
    }
    let span = site * w..(site + 1) * w;
    let ratio = |z: &[f64], zp: &[f64]| -> Option<f64> {
        let rho = metric.distance(&z[span.clone()], &zp[span.clone()]);
        (rho >= DEGENERATE_PAIR_EPS).then(|| (f(z) - f(zp)).abs() / rho)
    };
    // (max, evaluated, degenerate)
    let parts: Vec<(f64, usize, usize)> = match design.sampling {
        PairSampling::Random { pairs } => mc::par_chunks(pairs, mc::CHUNK_ROWS, seed, |rng, range| {
            let mut acc = (0.0_f64, 0, 0);
            for _ in range {
                let z: Vec<f64> = design.domain.iter().map(|&iv| draw_in(rng, iv)).collect();
                let mut zp = z.clone();
                for k in span.clone() {
                    zp[k] = draw_in(rng, design.domain[k]);
                }
                match ratio(&z, &zp) {
                    Some(r) => {
                        acc.0 = acc.0.max(r);
                        acc.1 += 1;
                    }
                    None => acc.2 += 1,
                }
            }
            acc
        }),
        PairSampling::Grid { points_per_axis, bases } => {
            if points_per_axis < 2 {
                return Err(Error::Parameter("grid needs at least two points per axis".into()));
            }
            let site_values: Vec<Vec<f64>> = {
                let axes: Vec<Vec<f64>> = span
                    .clone()
                    .map(|k| {
                        let iv = design.domain[k];
                        (0..points_per_axis)
                            .map(|a| iv.lo + (iv.hi - iv.lo) * a as f64 / (points_per_axis - 1) as f64)
                            .collect()
                    })
                    .collect();
                let mut out = vec![vec![]];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&v| {
                                let mut q = p.clone();
                                q.push(v);
                                q
                            })
                        })
                        .collect();
                }
                out
            };
            mc::par_chunks(bases, 1, seed, |rng, _| {
                let base: Vec<f64> = design.domain.iter().map(|&iv| draw_in(rng, iv)).collect();
                let points: Vec<(Vec<f64>, f64)> = site_values
                    .iter()
                    .map(|s| {
                        let mut z = base.clone();
                        z[span.clone()].copy_from_slice(s);
                        let v = f(&z);
                        (z, v)
                    })
                    .collect();
                let mut acc = (0.0_f64, 0, 0);
                for a in 0..points.len() {
                    for b in (a + 1)..points.len() {
                        let rho = metric.distance(&points[a].0[span.clone()], &points[b].0[span.clone()]);
                        if rho < DEGENERATE_PAIR_EPS {
                            acc.2 += 1;
                        } else {
                            acc.0 = acc.0.max((points[a].1 - points[b].1).abs() / rho);
                            acc.1 += 1;
                        }
                    }
                }
                acc
            })
        }
    };
    let (value, evaluated, degenerate) = parts
        .into_iter()
        .fold((0.0_f64, 0, 0), |a, p| (a.0.max(p.0), a.1 + p.1, a.2 + p.2));
    if evaluated == 0 {
        return Err(Error::DegeneratePairs);
    }
    Ok(OscillationEstimate {
        value,
        pairs_evaluated: evaluated,
        degenerate_pairs: degenerate,
        is_lower_bound: true,
    })
}

/// Pair design for [`lipschitz_profile`].
#[derive(Clone, Debug, PartialEq)]
pub struct PairGrid {
    /// Grid size `G`; the landscape is `G × G`.
    pub points: usize,
    /// Data-space prefixes `x^{[i-1]}` shared by each pair. Empty means the
    /// image of the reference median.
    pub prefixes: Vec<Vec<f64>>,
}

impl Default for PairGrid {
    fn default() -> Self {
        PairGrid {
            points: 64,
            prefixes: Vec::new(),
        }
    }
}

/// Ratio estimates on a `G × G` grid of data-space values of coordinate `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub prefix: Vec<f64>,
    /// Data-space grid values of coordinate `i`.
    pub values: Vec<f64>,
    /// Symmetric; `NaN` on degenerate pairs (including the diagonal).
    pub ratio: Array2<f64>,
    pub std_error: Array2<f64>,
}

impl Landscape {
    /// Largest finite ratio with its position.
    pub fn max(&self) -> Option<(f64, usize, usize)> {
        self.ratio.indexed_iter().filter(|(_, v)| v.is_finite()).fold(
            None,
            |best: Option<(f64, usize, usize)>, ((a, b), &v)| match best {
                Some((bv, _, _)) if bv >= v => best,
                _ => Some((v, a, b)),
            },
        )
    }

    /// CSV with columns `v_i,z_i,ratio_estimate,std_error` (off-diagonal, finite).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v_i", "z_i", "ratio_estimate", "std_error"])?;
        for ((a, b), &r) in self.ratio.indexed_iter() {
            if r.is_finite() {
                w.write_record([
                    self.values[a].to_string(),
                    self.values[b].to_string(),
                    r.to_string(),
                    self.std_error[[a, b]].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzProfile {
    pub i: usize,
    pub j: usize,
    pub landscapes: Vec<Landscape>,
    /// `L̂_ij`: maximum over all landscapes.
    pub estimate: f64,
    /// Monte Carlo standard error at the maximizing pair.
    pub std_error: f64,
    pub n_mc: usize,
}

/// Estimates `L_ij` for a triangular map: for pairs `(v, z)` sharing a prefix
/// and differing in coordinate `i`,
/// `E_τ[ρ(T(v̂, τ)_j, T(ẑ, τ)_j)] / ρ(v_i, z_i)` with `τ ~ ν^{(i,d]}`,
/// `v̂ = T^{-1}(v)`. Coordinates are zero-based, `i < j`.
///
/// All pairs share one draw of `τ` (common random numbers), so a pair's
/// estimate depends only on its values and the seed.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_profile(
    map: &TriangularMap,
    reference: &ReferenceMeasure,
    i: usize,
    j: usize,
    metric: &Metric,
    grid: &PairGrid,
    n_mc: usize,
    seed: u64,
) -> Result<LipschitzProfile> {
    let d = map.dim();
    if reference.dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: reference.dim,
        });
    }
    if !(i < j && j < d) {
        return Err(Error::Parameter(format!("need i < j < d, got i={i}, j={j}, d={d}")));
    }
    if grid.points < 2 {
        return Err(Error::Parameter("pair grid needs at least two points".into()));
    }
    mc::require_samples(n_mc, 2)?;
    let tau = reference.with_dim(d - i - 1)?.sample(n_mc, seed)?;
    let prefixes = if grid.prefixes.is_empty() {
        let median = vec![reference.quantile(0.5); i];
        vec![map.forward_prefix(&median)?]
    } else {
        grid.prefixes.clone()
    };

    let mut landscapes = Vec::with_capacity(prefixes.len());
    for prefix in prefixes {
        if prefix.len() != i {
            return Err(Error::DimensionMismatch {
                expected: i,
                got: prefix.len(),
            });
        }
        let z_prefix = map.invert_prefix(&prefix, DEFAULT_TOL)?;
        let own = map.domain()[i];
        let g = grid.points;
        let values: Vec<f64> = if own.is_bounded() {
            let range = map.component_range(&z_prefix)?;
            (0..g)
                .map(|a| range.lo + (range.hi - range.lo) * a as f64 / (g - 1) as f64)
                .collect()
        } else {
            (0..g)
                .map(|a| {
                    let mut z = z_prefix.clone();
                    z.push(reference.quantile((a + 1) as f64 / (g + 1) as f64));
                    map.component_value(&z)
                })
                .collect::<Result<_>>()?
        };
        // j-th output for every grid value and every τ
        let outputs: Vec<Vec<f64>> = values
            .par_iter()
            .map(|&v| {
                let mut x = prefix.clone();
                x.push(v);
                let mut z = map.invert_prefix(&x, DEFAULT_TOL)?;
                z.resize(j + 1, 0.0);
                Ok(tau
                    .rows()
                    .into_iter()
                    .map(|t| {
                        z[i + 1..=j].copy_from_slice(&t.as_slice().unwrap()[..j - i]);
                        map.eval_prefix(&z)[j]
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut ratio = Array2::from_elem((g, g), f64::NAN);
        let mut std_error = Array2::from_elem((g, g), f64::NAN);
        let cells: Vec<(usize, usize, f64, f64)> = (0..g)
            .into_par_iter()
            .flat_map_iter(|a| ((a + 1)..g).map(move |b| (a, b)))
            .filter_map(|(a, b)| {
                let rho = metric.distance(&[values[a]], &[values[b]]);
                if rho < DEGENERATE_PAIR_EPS {
                    return None;
                }
                let r: Vec<f64> = outputs[a]
                    .iter()
                    .zip(&outputs[b])
                    .map(|(ya, yb)| metric.distance(&[*ya], &[*yb]) / rho)
                    .collect();
                let (m, se) = mc::mean_and_se(&r);
                Some((a, b, m, se))
            })
            .collect();
        for (a, b, m, se) in cells {
            ratio[[a, b]] = m;
            ratio[[b, a]] = m;
            std_error[[a, b]] = se;
            std_error[[b, a]] = se;
        }
        landscapes.push(Landscape {
            prefix,
            values,
            ratio,
            std_error,
        });
    }
    let best = landscapes
        .iter()
        .filter_map(|l| l.max().map(|(v, a, b)| (v, l.std_error[[a, b]])))
        .fold(None, |acc: Option<(f64, f64)>, x| match acc {
            Some(b) if b.0 >= x.0 => Some(b),
            _ => Some(x),
        });
    let (estimate, std_error) = best.ok_or(Error::DegeneratePairs)?;
    Ok(LipschitzProfile {
        i,
        j,
        landscapes,
        estimate,
        std_error,
        n_mc,
    })
}

/// `L̂_ij` for every `i < j`, assembled into a strictly upper triangular matrix.
pub fn estimate_l_matrix(
    map: &TriangularMap,
    reference: &ReferenceMeasure,
    metric: &Metric,
    grid: &PairGrid,
    n_mc: usize,
    seed: u64,
) -> Result<(Array2<f64>, Vec<LipschitzProfile>)> {
    let d = map.dim();
    let mut l = Array2::zeros((d, d));
    let mut profiles = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let pair_seed = mc::derive_seed(seed, (i * d + j) as u64);
            let p = lipschitz_profile(map, reference, i, j, metric, grid, n_mc, pair_seed)?;
            l[[i, j]] = p.estimate;
            profiles.push(p);
        }
    }
    Ok((l, profiles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{AffineComponent, Component, FnMap};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn linear_coupling() -> TriangularMap {
        TriangularMap::new(vec![
            Component::Affine(AffineComponent::new(vec![1.0], 0.0).unwrap()),
            Component::Affine(AffineComponent::new(vec![0.5, 0.5], 0.0).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn build_d_examples() {
        assert_eq!(build_d(&Array2::zeros((3, 3))).unwrap(), Array2::<f64>::eye(3));
        let l = array![[0.0, 0.5, 0.25], [0.0, 0.0, 0.7], [0.0, 0.0, 0.0]];
        assert_eq!(
            build_d(&l).unwrap(),
            array![[1.0, 0.5, 0.25], [0.0, 1.0, 0.7], [0.0, 0.0, 1.0]]
        );
        assert_eq!(build_d(&array![[0.0]]).unwrap(), array![[1.0]]);
    }

    #[test]
    fn build_d_rejects_bad_shapes() {
        assert!(build_d(&array![[0.0, 0.0], [0.3, 0.0]]).is_err());
        assert!(build_d(&array![[0.1, 0.0], [0.0, 0.0]]).is_err());
        assert!(build_d(&array![[0.0, -1.0], [0.0, 0.0]]).is_err());
        assert!(build_d(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn gamma_scaling_modes() {
        let eye = Array2::<f64>::eye(3);
        let p = build_gamma(&eye, 2.0, 3, ScaleMode::Paper).unwrap();
        assert_eq!(p.gamma, &eye * (2.0 / 3.0));
        let c = build_gamma(&eye, 2.0, 3, ScaleMode::Conservative).unwrap();
        assert_eq!(c.gamma, &eye * 2.0);
        let d = array![[1.0, 0.5, 0.25], [0.0, 1.0, 0.7], [0.0, 0.0, 1.0]];
        let g = build_gamma(&d, 1.0, 3, ScaleMode::Paper).unwrap();
        assert_eq!(g.gamma, &d / 3.0);
        assert_eq!(g.l[[0, 1]], 0.5);
        assert_eq!(g.l[[1, 1]], 0.0);
    }

    #[test]
    fn dependency_json_round_trip() {
        let d = array![[1.0, 0.5], [0.0, 1.0]];
        let g = build_gamma(&d, 1.0, 2, ScaleMode::Conservative).unwrap();
        let back = DependencyMatrix::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn metric_axioms_on_grid() {
        let grid: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        for m in [Metric::absolute(1.0), Metric::discrete()] {
            for &a in &grid {
                for &b in &grid {
                    let (ab, ba) = (m.distance(&[a], &[b]), m.distance(&[b], &[a]));
                    assert_eq!(ab, ba);
                    assert_eq!(ab == 0.0, a == b);
                    assert!(ab <= m.diameter + 1e-15);
                }
            }
        }
        assert!(Metric::new(MetricKind::Discrete, f64::INFINITY).is_err());
    }

    #[test]
    fn coupling_of_identity_is_diagonal() {
        let id = TriangularMap::identity(2);
        let c = couple(&id, &id, &ReferenceMeasure::uniform(2), 1000, 4).unwrap();
        for r in c.rows() {
            assert_eq!(r[0], r[2]);
            assert_eq!(r[1], r[3]);
        }
    }

    #[test]
    fn antithetic_coupling_sums_to_one() {
        let id = TriangularMap::identity(1);
        let flip = FnMap::new(1, |z: &[f64]| vec![1.0 - z[0]]);
        let c = couple(&id, &flip, &ReferenceMeasure::uniform(1), 1000, 4).unwrap();
        for r in c.rows() {
            assert_eq!(r[0] + r[1], 1.0);
        }
        assert!(couple(&id, &TriangularMap::identity(2), &ReferenceMeasure::uniform(1), 5, 0).is_err());
    }

    #[test]
    fn oscillation_of_mean_is_one_over_d() {
        let f = |z: &[f64]| z.iter().sum::<f64>() / 4.0;
        let design = OscillationDesign::unit_cube(4, PairSampling::Random { pairs: 200 });
        for i in 0..4 {
            let e = local_oscillation(&f, i, &Metric::absolute(1.0), &design, 1).unwrap();
            assert_relative_eq!(e.value, 0.25, epsilon = 1e-12);
            assert!(e.is_lower_bound);
        }
    }

    #[test]
    fn oscillation_of_constant_is_zero() {
        let design = OscillationDesign::unit_cube(3, PairSampling::Random { pairs: 100 });
        let e = local_oscillation(&|_: &[f64]| 3.0, 1, &Metric::absolute(1.0), &design, 1).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn oscillation_of_square_by_grid_brute_force() {
        // sup over pairs of (z + z') → 2; a 201-point grid reaches 2 - 1/200
        let design = OscillationDesign::unit_cube(
            1,
            PairSampling::Grid {
                points_per_axis: 201,
                bases: 1,
            },
        );
        let e = local_oscillation(&|z: &[f64]| z[0] * z[0], 0, &Metric::absolute(1.0), &design, 2).unwrap();
        assert!((e.value - 2.0).abs() <= 0.01, "{}", e.value);
    }

    #[test]
    fn degenerate_pairs_error() {
        let design = OscillationDesign {
            domain: vec![Interval::new(0.5, 0.5)],
            site_width: 1,
            sampling: PairSampling::Random { pairs: 10 },
        };
        assert!(matches!(
            local_oscillation(&|z: &[f64]| z[0], 0, &Metric::absolute(1.0), &design, 0),
            Err(Error::DegeneratePairs)
        ));
    }

    #[test]
    fn lipschitz_of_linear_coupling_is_one_half() {
        let grid = PairGrid {
            points: 16,
            prefixes: vec![],
        };
        let p = lipschitz_profile(
            &linear_coupling(),
            &ReferenceMeasure::uniform(2),
            0,
            1,
            &Metric::absolute(1.0),
            &grid,
            256,
            5,
        )
        .unwrap();
        assert!((p.estimate - 0.5).abs() < 0.01, "{}", p.estimate);
        let l = &p.landscapes[0];
        for ((a, b), v) in l.ratio.indexed_iter() {
            assert_eq!(v.to_bits(), l.ratio[[b, a]].to_bits());
        }
    }

    #[test]
    fn lipschitz_of_identity_is_zero() {
        let grid = PairGrid {
            points: 8,
            prefixes: vec![vec![0.3]],
        };
        let p = lipschitz_profile(
            &TriangularMap::identity(3),
            &ReferenceMeasure::uniform(3),
            1,
            2,
            &Metric::absolute(1.0),
            &grid,
            64,
            5,
        )
        .unwrap();
        assert_eq!(p.estimate, 0.0);
        assert!(lipschitz_profile(
            &TriangularMap::identity(3),
            &ReferenceMeasure::uniform(3),
            2,
            1,
            &Metric::absolute(1.0),
            &grid,
            64,
            5
        )
        .is_err());
    }

    #[test]
    fn landscape_csv_has_header_and_rows() {
        let grid = PairGrid {
            points: 3,
            prefixes: vec![],
        };
        let p = lipschitz_profile(
            &linear_coupling(),
            &ReferenceMeasure::uniform(2),
            0,
            1,
            &Metric::absolute(1.0),
            &grid,
            16,
            5,
        )
        .unwrap();
        let mut buf = Vec::new();
        p.landscapes[0].write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("v_i,z_i,ratio_estimate,std_error\n"));
        assert_eq!(text.lines().count(), 1 + 6);
    }

    #[test]
    fn cyclic_band_rows_have_c_entries() {
        let b = cyclic_band(5, 3);
        for r in b.rows() {
            assert_eq!(r.sum(), 3.0);
        }
    }
}
