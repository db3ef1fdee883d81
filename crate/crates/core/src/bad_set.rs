//! Bad-input sets.
//!
//! A candidate matrix `L` declares a point bad when, for some `i < j` and some
//! probed counterpart of its coordinate `i`, the transport-stability ratio
//! exceeds `L_ij`. The mass of the bad set is bounded with Hoeffding's
//! inequality, and several candidates are compared under a union bound.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{certify, CertificateInput};
use crate::dependency::{Metric, OscillationVector, ScaleMode, DEGENERATE_PAIR_EPS};
use crate::mc;
use crate::transport::{ReferenceMeasure, TriangularMap, DEFAULT_TOL};
use crate::{Error, Result};

/// Tolerance on `Σ ε_k = ε`.
pub const BUDGET_TOL: f64 = 1e-12;

/// Standard errors a ratio estimate must clear before it counts as a violation.
pub const EXCEEDANCE_SE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BadSetCandidate {
    pub l: Array2<f64>,
    pub epsilon: f64,
    pub xi: Option<f64>,
    pub count: Option<usize>,
    pub n: Option<usize>,
}

impl BadSetCandidate {
    pub fn new(l: Array2<f64>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !l.is_square() || l.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Shape("candidate L must be square and nonnegative".into()));
        }
        Ok(BadSetCandidate {
            l,
            epsilon,
            xi: None,
            count: None,
            n: None,
        })
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("error budget must lie in (0, 1), got {eps}")))
    }
}

/// `L_ij = cap` for `0 < j - i ≤ bandwidth`, zero elsewhere.
pub fn banded(dim: usize, cap: f64, bandwidth: usize) -> Array2<f64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| if j > i && j - i <= bandwidth { cap } else { 0.0 })
}

/// Banded candidates over all `(cap, bandwidth)` pairs with `ε` split
/// according to `weights` (equally when `None`).
pub fn banded_candidates(
    dim: usize,
    caps: &[f64],
    bandwidths: &[usize],
    epsilon: f64,
    weights: Option<&[f64]>,
) -> Result<Vec<BadSetCandidate>> {
    let shapes: Vec<(f64, usize)> = bandwidths
        .iter()
        .flat_map(|&w| caps.iter().map(move |&c| (c, w)))
        .collect();
    if shapes.is_empty() {
        return Err(Error::Parameter("no candidate shapes".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != shapes.len() => {
            return Err(Error::DimensionMismatch {
                expected: shapes.len(),
                got: w.len(),
            })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; shapes.len()],
    };
    let total: f64 = w.iter().sum();
    shapes
        .into_iter()
        .zip(w)
        .map(|((c, bw), wk)| BadSetCandidate::new(banded(dim, c, bw), epsilon * wk / total))
        .collect()
}

/// Counterparts probed for each coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeDesign {
    /// Evenly spaced over the component's range, endpoints included.
    pub points: usize,
}

impl Default for ProbeDesign {
    fn default() -> Self {
        ProbeDesign { points: 64 }
    }
}

/// Per-point exceedance statistic: `s_ij = max_probe (ratio - 2·se)`.
/// A point is bad under `L` iff `s_ij > L_ij` for some `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointStatistic {
    pub s: Array2<f64>,
    /// No probe was at positive distance.
    pub degenerate: bool,
}

impl PointStatistic {
    pub fn is_bad(&self, l: &Array2<f64>) -> bool {
        self.s.indexed_iter().any(|((i, j), &s)| i < j && s > l[[i, j]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub bad: bool,
    pub degenerate_probes: bool,
}

/// Everything membership needs besides the point and `L`. The reference draws
/// `τ` and the first coordinate's probe outputs are shared by all points.
pub struct MembershipContext<'a> {
    map: &'a TriangularMap,
    metric: Metric,
    probe: ProbeDesign,
    taus: Vec<Array2<f64>>,
    first_probes: Vec<(f64, Vec<Vec<f64>>)>,
}

impl<'a> MembershipContext<'a> {
    pub fn new(
        map: &'a TriangularMap,
        reference: &ReferenceMeasure,
        metric: Metric,
        probe: ProbeDesign,
        n_mc: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = map.dim();
        if reference.dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: reference.dim,
            });
        }
        if probe.points < 2 {
            return Err(Error::Parameter("probe design needs at least two points".into()));
        }
        mc::require_samples(n_mc, 2)?;
        let taus = (0..d.saturating_sub(1))
            .map(|i| {
                reference
                    .with_dim(d - i - 1)?
                    .sample(n_mc, mc::derive_seed(seed, i as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ctx = MembershipContext {
            map,
            metric,
            probe,
            taus,
            first_probes: Vec::new(),
        };
        if d > 1 {
            ctx.first_probes = ctx.probe_outputs(&[], 0)?;
        }
        Ok(ctx)
    }

    /// Probe values of coordinate `i` given the data prefix, each with the
    /// `j`-th outputs (`j > i`) under every `τ`.
    fn probe_outputs(&self, prefix: &[f64], i: usize) -> Result<Vec<(f64, Vec<Vec<f64>>)>> {
        let z_prefix = self.map.invert_prefix(prefix, DEFAULT_TOL)?;
        let range = self.map.component_range(&z_prefix)?;
        let p = self.probe.points;
        (0..p)
            .into_par_iter()
            .map(|a| {
                let v = range.lo + (range.hi - range.lo) * a as f64 / (p - 1) as f64;
                Ok((v, self.outputs_at(prefix, v, i)?))
            })
            .collect()
    }

    fn outputs_at(&self, prefix: &[f64], v: f64, i: usize) -> Result<Vec<Vec<f64>>> {
        let d = self.map.dim();
        let mut x = prefix.to_vec();
        x.push(v);
        let mut z = self.map.invert_prefix(&x, DEFAULT_TOL)?;
        z.resize(d, 0.0);
        let tau = &self.taus[i];
        let mut out = vec![Vec::with_capacity(tau.nrows()); d - i - 1];
        for t in tau.rows() {
            z[i + 1..].copy_from_slice(t.as_slice().unwrap());
            let y = self.map.eval_prefix(&z);
            for j in (i + 1)..d {
                out[j - i - 1].push(y[j]);
            }
        }
        Ok(out)
    }

    /// Exceedance statistic of a data point.
    pub fn statistic(&self, x: &[f64]) -> Result<PointStatistic> {
        let d = self.map.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let mut s = Array2::from_elem((d, d), f64::NEG_INFINITY);
        let mut any_valid = d < 2;
        for i in 0..d.saturating_sub(1) {
            let own = self.outputs_at(&x[..i], x[i], i)?;
            let fresh;
            let probes = if i == 0 {
                &self.first_probes
            } else {
                fresh = self.probe_outputs(&x[..i], i)?;
                &fresh
            };
            for (v, outs) in probes {
                let rho = self.metric.distance(&[x[i]], &[*v]);
                if rho < DEGENERATE_PAIR_EPS {
                    continue;
                }
                any_valid = true;
                for j in (i + 1)..d {
                    let r: Vec<f64> = own[j - i - 1]
                        .iter()
                        .zip(&outs[j - i - 1])
                        .map(|(a, b)| self.metric.distance(&[*a], &[*b]) / rho)
                        .collect();
                    let (mean, se) = mc::mean_and_se(&r);
                    let stat = mean - EXCEEDANCE_SE * se;
                    if stat > s[[i, j]] {
                        s[[i, j]] = stat;
                    }
                }
            }
        }
        Ok(PointStatistic {
            s,
            degenerate: !any_valid,
        })
    }

    /// Statistics for every row of `sample`.
    pub fn statistics(&self, sample: &Array2<f64>) -> Result<Vec<PointStatistic>> {
        let rows: Vec<Vec<f64>> = sample.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.par_iter().map(|x| self.statistic(x)).collect()
    }

    pub fn membership(&self, x: &[f64], l: &Array2<f64>) -> Result<Membership> {
        let st = self.statistic(x)?;
        Ok(Membership {
            bad: st.is_bad(l),
            degenerate_probes: st.degenerate,
        })
    }
}

/// One-shot membership test of `x` under `L`.
#[allow(clippy::too_many_arguments)]
pub fn membership(
    x: &[f64],
    l: &Array2<f64>,
    map: &TriangularMap,
    reference: &ReferenceMeasure,
    metric: Metric,
    probe: ProbeDesign,
    n_mc: usize,
    seed: u64,
) -> Result<Membership> {
    MembershipContext::new(map, reference, metric, probe, n_mc, seed)?.membership(x, l)
}

/// `min(1, count/n + sqrt(ln(2/ε) / (2n)))`.
pub fn hoeffding_xi(count: usize, n: usize, epsilon: f64) -> Result<f64> {
    mc::require_samples(n, 1)?;
    check_epsilon(epsilon)?;
    if count > n {
        return Err(Error::Parameter(format!("count {count} exceeds sample size {n}")));
    }
    let n = n as f64;
    Ok((count as f64 / n + ((2.0 / epsilon).ln() / (2.0 * n)).sqrt()).min(1.0))
}

/// Fills in count, `n` and `ξ̂` of `candidate` from precomputed statistics.
pub fn estimate_xi(stats: &[PointStatistic], candidate: &mut BadSetCandidate) -> Result<f64> {
    let count = stats.iter().filter(|s| s.is_bad(&candidate.l)).count();
    let xi = hoeffding_xi(count, stats.len(), candidate.epsilon)?;
    candidate.count = Some(count);
    candidate.n = Some(stats.len());
    candidate.xi = Some(xi);
    Ok(xi)
}

/// Certificate terms shared by all candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionContext {
    pub m: usize,
    pub rho_norm: f64,
    pub osc: OscillationVector,
    pub kl: f64,
    pub delta: f64,
    pub empirical_risk: f64,
    pub mode: ScaleMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateReport {
    pub index: usize,
    pub epsilon: f64,
    pub count: usize,
    pub n: usize,
    pub xi: f64,
    pub gap: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Selection {
    pub chosen: usize,
    pub epsilon: f64,
    pub exceedance_rule: String,
    pub candidates: Vec<CandidateReport>,
}

/// Certificate gap with `D` built from `L`, and no bad-set term.
pub fn gap_for(l: &Array2<f64>, ctx: &SelectionContext) -> Result<f64> {
    let input = CertificateInput::from_l(l, ctx.m, ctx.rho_norm, ctx.osc.clone(), ctx.kl, ctx.delta, 0.0, 0.0)?;
    Ok(certify(&input, ctx.mode)?.gap)
}

/// Estimates `ξ̂` for each candidate and returns the one minimising
/// `gap + ξ̂` (first index on ties).
pub fn select_candidate(
    candidates: &mut [BadSetCandidate],
    epsilon: f64,
    stats: &[PointStatistic],
    ctx: &SelectionContext,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Parameter("no candidates".into()));
    }
    let sum: f64 = candidates.iter().map(|c| c.epsilon).sum();
    if (sum - epsilon).abs() > BUDGET_TOL {
        return Err(Error::BudgetMismatch {
            expected: epsilon,
            got: sum,
        });
    }
    let mut reports = Vec::with_capacity(candidates.len());
    for (index, c) in candidates.iter_mut().enumerate() {
        check_epsilon(c.epsilon)?;
        let xi = estimate_xi(stats, c)?;
        let gap = gap_for(&c.l, ctx)?;
        reports.push(CandidateReport {
            index,
            epsilon: c.epsilon,
            count: c.count.unwrap_or(0),
            n: stats.len(),
            xi,
            gap,
            total: ctx.empirical_risk + gap + xi,
        });
    }
    let chosen = reports.iter().fold(0, |best, r| {
        if r.gap + r.xi < reports[best].gap + reports[best].xi {
            r.index
        } else {
            best
        }
    });
    Ok(Selection {
        chosen,
        epsilon,
        exceedance_rule: format!("ratio - {EXCEEDANCE_SE}·se > L_ij"),
        candidates: reports,
    })
}

/// Candidate-file entry for `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LSpec {
    Dense(Vec<Vec<f64>>),
    Banded { banded: BandSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub dim: usize,
    pub cap: f64,
    pub bandwidth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpec {
    #[serde(rename = "L")]
    pub l: LSpec,
    pub epsilon: f64,
}

impl CandidateSpec {
    pub fn build(&self) -> Result<BadSetCandidate> {
        let l = match &self.l {
            LSpec::Dense(rows) => crate::dependency::from_rows(rows)?,
            LSpec::Banded { banded: b } => banded(b.dim, b.cap, b.bandwidth),
        };
        BadSetCandidate::new(l, self.epsilon)
    }
}

/// Parses a JSON list of candidates.
pub fn parse_candidates(text: &str) -> Result<Vec<BadSetCandidate>> {
    let specs: Vec<CandidateSpec> = serde_json::from_str(text)?;
    specs.iter().map(CandidateSpec::build).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HoeffdingCoverage {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    /// `ε + 3 sqrt(ε(1-ε)/trials)`.
    pub allowed: f64,
    pub passes: bool,
}

/// Repeatedly estimates the mass of the box `[0, 0.25] × [0, 4ξ*]` under the
/// uniform law on `[0, 1]²` and counts how often `ξ* > ξ̂`.
pub fn hoeffding_coverage(trials: usize, n: usize, xi_star: f64, epsilon: f64, seed: u64) -> Result<HoeffdingCoverage> {
    mc::require_samples(trials, 1)?;
    mc::require_samples(n, 1)?;
    check_epsilon(epsilon)?;
    if !(xi_star > 0.0 && xi_star <= 0.25) {
        return Err(Error::Parameter(format!(
            "target mass must lie in (0, 0.25], got {xi_star}"
        )));
    }
    let height = 4.0 * xi_star;
    let hits: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = mc::chunk_rng(mc::derive_seed(seed, t as u64), 0);
            let count = (0..n)
                .filter(|_| {
                    let (a, b): (f64, f64) = (rng.random(), rng.random());
                    a <= 0.25 && b <= height
                })
                .count();
            Ok(xi_star > hoeffding_xi(count, n, epsilon)?)
        })
        .collect();
    let violations = hits
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|v| *v)
        .count();
    let rate = violations as f64 / trials as f64;
    let allowed = epsilon + 3.0 * (epsilon * (1.0 - epsilon) / trials as f64).sqrt();
    Ok(HoeffdingCoverage {
        trials,
        violations,
        rate,
        allowed,
        passes: rate <= allowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{AffineComponent, Component};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn linear_coupling() -> TriangularMap {
        TriangularMap::new(vec![
            Component::Affine(AffineComponent::new(vec![1.0], 0.0).unwrap()),
            Component::Affine(AffineComponent::new(vec![0.5, 0.5], 0.0).unwrap()),
        ])
        .unwrap()
    }

    fn ctx() -> SelectionContext {
        SelectionContext {
            m: 100,
            rho_norm: 1.0,
            osc: OscillationVector::constant(2, 0.5).unwrap(),
            kl: 5.0,
            delta: 0.05,
            empirical_risk: 0.1,
            mode: ScaleMode::Paper,
        }
    }

    fn stat(s01: f64) -> PointStatistic {
        let mut s = Array2::from_elem((2, 2), f64::NEG_INFINITY);
        s[[0, 1]] = s01;
        PointStatistic { s, degenerate: false }
    }

    #[test]
    fn xi_examples() {
        assert_relative_eq!(
            hoeffding_xi(0, 5000, 0.05).unwrap(),
            (40.0f64.ln() / 10000.0).sqrt(),
            epsilon = 1e-15
        );
        assert!((hoeffding_xi(0, 5000, 0.05).unwrap() - 0.019206).abs() < 1e-6);
        assert_eq!(hoeffding_xi(50, 50, 0.05).unwrap(), 1.0);
        assert!(hoeffding_xi(1, 10, 1.5).is_err());
        assert!(hoeffding_xi(0, 0, 0.05).is_err());
    }

    #[test]
    fn xi_nonincreasing_in_n() {
        let mut prev = f64::INFINITY;
        for n in [100, 200, 400, 800, 1600] {
            let x = hoeffding_xi(n / 10, n, 0.05).unwrap();
            assert!(x <= prev);
            prev = x;
        }
    }

    #[test]
    fn identity_map_has_no_bad_points() {
        let map = TriangularMap::identity(3);
        let r = ReferenceMeasure::uniform(3);
        let c = MembershipContext::new(&map, &r, Metric::absolute(1.0), ProbeDesign { points: 9 }, 256, 1).unwrap();
        let zero = Array2::zeros((3, 3));
        for x in [[0.1, 0.5, 0.9], [0.0, 0.0, 0.0], [0.7, 0.2, 0.4]] {
            assert!(!c.membership(&x, &zero).unwrap().bad);
        }
    }

    #[test]
    fn linear_coupling_membership() {
        // ratio is exactly 0.5 for every pair
        let map = linear_coupling();
        let r = ReferenceMeasure::uniform(2);
        let c = MembershipContext::new(&map, &r, Metric::absolute(1.0), ProbeDesign { points: 11 }, 512, 4).unwrap();
        let st = c.statistic(&[0.3, 0.4]).unwrap();
        assert!((st.s[[0, 1]] - 0.5).abs() < 1e-9);
        assert!(st.is_bad(&array![[0.0, 0.4], [0.0, 0.0]]));
        assert!(!st.is_bad(&array![[0.0, 0.6], [0.0, 0.0]]));
    }

    #[test]
    fn degenerate_probes_warn() {
        // the first component is constant, so every probe coincides with x
        let map = TriangularMap::new(vec![
            Component::Affine(AffineComponent::new(vec![1e-12], 0.3).unwrap()),
            Component::Affine(AffineComponent::new(vec![0.5, 0.5], 0.0).unwrap()),
        ])
        .unwrap();
        let r = ReferenceMeasure::uniform(2);
        let m = membership(
            &[0.3, 0.2],
            &Array2::zeros((2, 2)),
            &map,
            &r,
            Metric::absolute(1.0),
            ProbeDesign { points: 5 },
            64,
            1,
        )
        .unwrap();
        assert!(!m.bad);
        assert!(m.degenerate_probes);
    }

    #[test]
    fn larger_l_is_subset() {
        let map = linear_coupling();
        let r = ReferenceMeasure::uniform(2);
        let c = MembershipContext::new(&map, &r, Metric::absolute(1.0), ProbeDesign { points: 7 }, 128, 2).unwrap();
        let sample = crate::transport::pushforward_sample(&map, &r, 50, 3).unwrap();
        let stats = c.statistics(&sample).unwrap();
        for cap in [0.0, 0.2, 0.45, 0.5, 0.6] {
            for bigger in [cap, cap + 0.01, cap + 1.0] {
                let (small, large) = (banded(2, cap, 1), banded(2, bigger, 1));
                for s in &stats {
                    assert!(!s.is_bad(&large) || s.is_bad(&small));
                }
            }
        }
    }

    #[test]
    fn select_single_and_ties() {
        let stats = vec![stat(0.3); 10];
        let mut one = vec![BadSetCandidate::new(banded(2, 1.0, 1), 0.05).unwrap()];
        assert_eq!(select_candidate(&mut one, 0.05, &stats, &ctx()).unwrap().chosen, 0);
        let mut two = vec![
            BadSetCandidate::new(banded(2, 1.0, 1), 0.025).unwrap(),
            BadSetCandidate::new(banded(2, 1.0, 1), 0.025).unwrap(),
        ];
        assert_eq!(select_candidate(&mut two, 0.05, &stats, &ctx()).unwrap().chosen, 0);
        assert!(matches!(
            select_candidate(&mut two, 0.06, &stats, &ctx()),
            Err(Error::BudgetMismatch { .. })
        ));
    }

    #[test]
    fn select_avoids_saturated_candidate() {
        // every point violates cap 0.1, none violates cap 2
        let stats = vec![stat(1.0); 200];
        let mut c = vec![
            BadSetCandidate::new(banded(2, 0.1, 1), 0.025).unwrap(),
            BadSetCandidate::new(banded(2, 2.0, 1), 0.025).unwrap(),
        ];
        let s = select_candidate(&mut c, 0.05, &stats, &ctx()).unwrap();
        assert_eq!(s.candidates[0].xi, 1.0);
        let (g0, g1) = (s.candidates[0].gap, s.candidates[1].gap);
        assert!(g1 - g0 <= 1.0 - s.candidates[1].xi);
        assert_eq!(s.chosen, 1);
        // direct evaluation of both objective values
        let ctx = ctx();
        assert_relative_eq!(g0, gap_for(&banded(2, 0.1, 1), &ctx).unwrap(), epsilon = 1e-15);
        assert_relative_eq!(
            s.candidates[1].total,
            ctx.empirical_risk + g1 + hoeffding_xi(0, 200, 0.025).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn banded_generator() {
        let c = banded_candidates(4, &[0.5, 1.0], &[1, 2], 0.04, None).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|k| (k.epsilon - 0.01).abs() < 1e-15));
        assert_eq!(c[2].l, banded(4, 0.5, 2));
        assert_eq!(c[0].l[[0, 2]], 0.0);
        assert_eq!(c[0].l[[0, 1]], 0.5);
        assert_eq!(c[0].l[[1, 0]], 0.0);
        let w = banded_candidates(2, &[1.0, 2.0], &[1], 0.04, Some(&[3.0, 1.0])).unwrap();
        assert_relative_eq!(w[0].epsilon, 0.03, epsilon = 1e-15);
    }

    #[test]
    fn candidate_file() {
        let text = r#"[
            {"L": [[0.0, 0.7], [0.0, 0.0]], "epsilon": 0.02},
            {"L": {"banded": {"dim": 3, "cap": 0.4, "bandwidth": 1}}, "epsilon": 0.03}
        ]"#;
        let c = parse_candidates(text).unwrap();
        assert_eq!(c[0].l[[0, 1]], 0.7);
        assert_eq!(c[1].l, banded(3, 0.4, 1));
        assert!(parse_candidates(r#"[{"L": [[0.0]], "epsilon": 2.0}]"#).is_err());
    }

    #[test]
    fn coverage_small() {
        let c = hoeffding_coverage(200, 500, 0.05, 0.05, 9).unwrap();
        assert!(c.passes);
        assert_eq!(c, hoeffding_coverage(200, 500, 0.05, 0.05, 9).unwrap());
    }
}
