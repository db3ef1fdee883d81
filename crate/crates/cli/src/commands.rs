use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use krcert::bad_set::{self, MembershipContext, PointStatistic, ProbeDesign, SelectionContext};
use krcert::certificate::{self, CertificateInput, GaussianPredictorDist, StructuredData, ToyTask, SITE_FACTOR};
use krcert::concentration::{self, PushforwardSampler};
use krcert::dependency::{self, Metric, OscillationVector, PairGrid, ScaleMode};
use krcert::mc::derive_seed;
use krcert::toy::{self, ToyParams};
use krcert::transport::{pushforward_sample, MapFile, ReferenceMeasure, TriangularMap};
use ndarray::Array2;
use serde::Serialize;

use crate::config::{self, BadsetConfig, CertifyConfig, DepsConfig, MgfConfig, ToyConfig};

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration: exit 2.
    Config(anyhow::Error),
    /// Numerical or runtime failure: exit 1.
    Numeric(anyhow::Error),
}

pub type Outcome<T> = Result<T, Failure>;

pub trait Classify<T> {
    fn cfg(self) -> Outcome<T>;
    fn num(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn cfg(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn num(self) -> Outcome<T> {
        self.map_err(|e| Failure::Numeric(e.into()))
    }
}

/// What every subcommand returns to the dispatcher.
pub struct Run {
    pub config_bytes: Vec<u8>,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub summary: String,
    /// Set when the run completed but a checked property failed.
    pub failed_check: Option<String>,
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Outcome<String> {
    let text = serde_json::to_string_pretty(value).num()? + "\n";
    fs::write(out.join(name), text)
        .with_context(|| format!("cannot write {}", out.join(name).display()))
        .num()?;
    Ok(name.to_string())
}

fn read_map_file(path: &Path) -> anyhow::Result<MapFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read map {}", path.display()))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(MapFile::parse(&text, json)?)
}

fn load_map(dir: &Path, path: &Option<PathBuf>) -> Outcome<(MapFile, TriangularMap)> {
    let file = match config::resolve(dir, path) {
        Some(p) => read_map_file(&p).cfg()?,
        None => toy::preset_file(),
    };
    let map = file.build().cfg()?;
    Ok((file, map))
}

pub fn toy(cfg: Option<&Path>, seed: Option<u64>, out: &Path, grid: Option<usize>, mc: Option<usize>) -> Outcome<Run> {
    let loaded = config::load::<ToyConfig>(cfg).cfg()?;
    let c = loaded.value;
    let seed = seed.or(c.seed).unwrap_or(0);
    let spec = match config::resolve(&loaded.dir, &c.map) {
        Some(p) => read_map_file(&p).cfg()?,
        None => toy::preset_file(),
    };
    toy::build_toy_map(&spec).cfg()?;
    let params = ToyParams {
        grid: grid.unwrap_or(c.grid),
        n_mc: mc.unwrap_or(c.n_mc),
        seed,
        n_tradeoff: c.n_tradeoff,
        n_scatter: c.n_scatter,
    };
    if params.grid < 2 || params.n_mc == 0 || params.n_tradeoff == 0 || params.n_scatter == 0 {
        return Err(Failure::Config(anyhow!("grid must be ≥ 2 and sample sizes positive")));
    }
    let results = toy::run_toy(&spec, &params, &c.improvement).num()?;
    let emitted = toy::emit_figures(&results, out).num()?;
    let imp = results.improvement.as_ref().expect("run_toy fills the improvement");
    let landscape = results.landscape.as_ref().expect("run_toy fills the landscape");
    let summary = format!(
        "L12 landscape max {:.4}; best cap {:.4} gives gap + xi = {:.4} against {:.4} without exclusion",
        landscape.max(),
        imp.best.cap,
        imp.best.objective,
        imp.baseline_gap
    );
    Ok(Run {
        config_bytes: loaded.bytes,
        seed,
        outputs: emitted
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        summary,
        failed_check: None,
    })
}

#[derive(Serialize)]
struct CertifyReport {
    map: MapFile,
    m: usize,
    structure_size: usize,
    site_factor: f64,
    l_matrix: Vec<Vec<f64>>,
    kl: f64,
    empirical_risk: f64,
    oscillation: OscillationVector,
    posterior_mass_outside_class: f64,
    posterior_outside_class: bool,
    selection: Option<bad_set::Selection>,
    rejected_draws: usize,
    certificate: certificate::CertificateReport,
    monte_carlo_risk: Option<RiskCheck>,
}

#[derive(Serialize)]
struct RiskCheck {
    n: usize,
    mean: f64,
    std_error: f64,
    covered: bool,
}

fn labelled(x: Array2<f64>) -> Outcome<StructuredData> {
    let y = x.mapv(ToyTask::<TriangularMap>::label);
    StructuredData::new(x, y).num()
}

pub fn certify(cfg: Option<&Path>, seed: Option<u64>, out: &Path) -> Outcome<Run> {
    let loaded = config::load::<CertifyConfig>(cfg).cfg()?;
    let c = loaded.value;
    let seed = seed.or(c.seed).unwrap_or(0);
    let (map_file, map) = load_map(&loaded.dir, &c.map)?;
    let d = map.dim();
    let reference = ReferenceMeasure::uniform(d);
    let posterior = GaussianPredictorDist::new(c.posterior.mean.clone(), c.posterior.var.clone()).cfg()?;
    let prior = GaussianPredictorDist::new(c.prior.mean.clone(), c.prior.var.clone()).cfg()?;
    if posterior.dim() != 2 || prior.dim() != 2 {
        return Err(Failure::Config(anyhow!("posterior and prior are over (w, b)")));
    }
    let candidates = match config::resolve(&loaded.dir, &c.candidates) {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .with_context(|| format!("cannot read {}", p.display()))
                .cfg()?;
            Some(bad_set::parse_candidates(&text).cfg()?)
        }
        None => None,
    };
    let class = c.class;
    let metric = Metric::component_sum(&[1.0, 1.0]).num()?;
    let osc = certificate::oscillation_vector(&class, d, &metric, None).num()?;
    let kl = certificate::kl_gaussian(&posterior, &prior).num()?;
    if !kl.is_finite() {
        return Err(Failure::Config(anyhow!("KL(posterior ‖ prior) is infinite")));
    }
    let task = ToyTask { map: &map, reference };

    let (l_site, xi, selection, data, rejected) = match candidates {
        Some(mut cands) => {
            let ctx = MembershipContext::new(
                &map,
                &reference,
                Metric::absolute(1.0),
                ProbeDesign { points: c.probe.points },
                c.probe.n_mc,
                derive_seed(seed, 1),
            )
            .num()?;
            let sample = pushforward_sample(&map, &reference, c.n_badset, derive_seed(seed, 2)).num()?;
            // compare in site units: s·k > L·k
            let scale = |s: PointStatistic| PointStatistic {
                s: s.s * SITE_FACTOR,
                degenerate: s.degenerate,
            };
            let stats: Vec<PointStatistic> = ctx.statistics(&sample).num()?.into_iter().map(scale).collect();
            for cand in cands.iter_mut() {
                cand.l *= SITE_FACTOR;
            }
            let sel_ctx = SelectionContext {
                m: c.m,
                rho_norm: metric.diameter,
                osc: osc.clone(),
                kl,
                delta: c.delta,
                empirical_risk: 0.0,
                mode: c.mode,
            };
            let selection = bad_set::select_candidate(&mut cands, c.epsilon, &stats, &sel_ctx).num()?;
            let chosen = &cands[selection.chosen];
            let l_data = &chosen.l / SITE_FACTOR;
            // training data from the good set, by rejection
            let mut rows: Vec<f64> = Vec::with_capacity(c.m * d);
            let (mut kept, mut rejected, mut round) = (0usize, 0usize, 0u64);
            while kept < c.m {
                let batch =
                    pushforward_sample(&map, &reference, c.m.max(256), derive_seed(seed, 1000 + round)).num()?;
                let st = ctx.statistics(&batch).num()?;
                for (x, s) in batch.rows().into_iter().zip(st) {
                    if kept == c.m {
                        break;
                    }
                    if s.is_bad(&l_data) {
                        rejected += 1;
                    } else {
                        rows.extend(x.iter());
                        kept += 1;
                    }
                }
                round += 1;
                if round > 1000 && kept == 0 {
                    return Err(Failure::Numeric(anyhow!("the chosen good set accepted no draws")));
                }
            }
            let x = Array2::from_shape_vec((c.m, d), rows).num()?;
            (
                chosen.l.clone(),
                chosen.xi.unwrap_or(1.0),
                Some(selection),
                labelled(x)?,
                rejected,
            )
        }
        None => {
            let grid = PairGrid {
                points: c.lipschitz.grid,
                prefixes: Vec::new(),
            };
            let (l, _) = dependency::estimate_l_matrix(
                &map,
                &reference,
                &Metric::absolute(1.0),
                &grid,
                c.lipschitz.n_mc,
                derive_seed(seed, 3),
            )
            .num()?;
            let data = task.sample(c.m, derive_seed(seed, 4)).num()?;
            (l * SITE_FACTOR, 0.0, None, data, 0)
        }
    };

    let r_m = certificate::empirical_risk(&posterior, &data, &class, c.n_theta, derive_seed(seed, 5)).num()?;
    let input = CertificateInput::from_l(&l_site, c.m, metric.diameter, osc.clone(), kl, c.delta, xi, r_m).num()?;
    let report = certificate::certify(&input, c.mode).num()?;
    let risk = if c.n_risk > 0 {
        let (mean, se) = task
            .true_risk(&posterior, &class, c.n_risk, derive_seed(seed, 6))
            .num()?;
        Some(RiskCheck {
            n: c.n_risk,
            mean,
            std_error: se,
            covered: report.total >= mean - 3.0 * se,
        })
    } else {
        None
    };
    let summary = format!(
        "R_m {:.4} + gap {:.4} + xi {:.4} = {:.4}{}",
        r_m,
        report.gap,
        xi,
        report.total,
        risk.as_ref()
            .map(|r| format!(" (Monte Carlo risk {:.4} ± {:.4})", r.mean, r.std_error))
            .unwrap_or_default()
    );
    let failed_check = risk.as_ref().filter(|r| !r.covered).map(|r| {
        format!(
            "certified total {:.4} is below Monte Carlo risk {:.4} - 3σ",
            report.total, r.mean
        )
    });
    let mass_outside = posterior.mass_outside(class.w_bound);
    let full = CertifyReport {
        map: map_file,
        m: c.m,
        structure_size: d,
        site_factor: SITE_FACTOR,
        l_matrix: l_site.rows().into_iter().map(|r| r.to_vec()).collect(),
        kl,
        empirical_risk: r_m,
        oscillation: osc,
        posterior_mass_outside_class: mass_outside,
        posterior_outside_class: mass_outside > 1e-6,
        selection,
        rejected_draws: rejected,
        certificate: report,
        monte_carlo_risk: risk,
    };
    let name = write_json(out, "certificate.json", &full)?;
    Ok(Run {
        config_bytes: loaded.bytes,
        seed,
        outputs: vec![name],
        summary,
        failed_check,
    })
}

#[derive(Serialize)]
struct MgfDim {
    d: usize,
    csv: String,
    conservative_holds: bool,
    paper_holds: bool,
    rows: Vec<concentration::DominationRow>,
}

#[derive(Serialize)]
struct MgfReport {
    n: usize,
    rho_norm: f64,
    statistic: &'static str,
    conservative_holds: bool,
    paper_holds: bool,
    dims: Vec<MgfDim>,
}

pub fn mgf_check(cfg: Option<&Path>, seed: Option<u64>, out: &Path) -> Outcome<Run> {
    let loaded = config::load::<MgfConfig>(cfg).cfg()?;
    let c = loaded.value;
    let seed = seed.or(c.seed).unwrap_or(0);
    if c.dims.is_empty() || c.dims.contains(&0) || c.n < 2 || c.lambdas.is_empty() {
        return Err(Failure::Config(anyhow!(
            "need positive dims, n ≥ 2 and a nonempty λ grid"
        )));
    }
    let mut dims = Vec::new();
    let mut outputs = Vec::new();
    for &d in &c.dims {
        let map = TriangularMap::identity(d);
        let sampler = PushforwardSampler {
            map: &map,
            reference: ReferenceMeasure::uniform(d),
        };
        let deps = dependency::build_gamma(&Array2::eye(d), c.rho_norm, d, ScaleMode::Conservative).num()?;
        let osc = OscillationVector::constant(d, 1.0 / d as f64).num()?;
        let mean = |z: &[f64]| z.iter().sum::<f64>() / z.len() as f64;
        let rows = concentration::domination_table(
            &mean,
            &sampler,
            &deps,
            &osc,
            &c.lambdas,
            c.n,
            derive_seed(seed, d as u64),
        )
        .num()?;
        let csv = format!("mgf_d{d}.csv");
        let file = fs::File::create(out.join(&csv)).num()?;
        concentration::write_domination_csv(&rows, file).num()?;
        outputs.push(csv.clone());
        dims.push(MgfDim {
            d,
            csv,
            conservative_holds: rows.iter().all(|r| r.holds_conservative),
            paper_holds: rows.iter().all(|r| r.holds_paper),
            rows,
        });
    }
    let report = MgfReport {
        n: c.n,
        rho_norm: c.rho_norm,
        statistic: "coordinate mean of independent uniforms",
        conservative_holds: dims.iter().all(|d| d.conservative_holds),
        paper_holds: dims.iter().all(|d| d.paper_holds),
        dims,
    };
    outputs.push(write_json(out, "mgf_report.json", &report)?);
    Ok(Run {
        config_bytes: loaded.bytes,
        seed,
        outputs,
        summary: format!(
            "conservative-mode bound holds: {}; paper-mode bound holds: {}",
            report.conservative_holds, report.paper_holds
        ),
        failed_check: (!report.conservative_holds).then(|| "conservative-mode MGF bound violated".to_string()),
    })
}

#[derive(Serialize)]
struct PairSummary {
    i: usize,
    j: usize,
    estimate: f64,
    std_error: f64,
    landscape_csv: String,
}

pub fn deps(cfg: Option<&Path>, seed: Option<u64>, out: &Path) -> Outcome<Run> {
    let loaded = config::load::<DepsConfig>(cfg).cfg()?;
    let c = loaded.value;
    let seed = seed.or(c.seed).unwrap_or(0);
    let (_, map) = load_map(&loaded.dir, &c.map)?;
    let d = map.dim();
    let reference = ReferenceMeasure::uniform(d);
    let grid = PairGrid {
        points: c.lipschitz.grid,
        prefixes: Vec::new(),
    };
    let (l, profiles) =
        dependency::estimate_l_matrix(&map, &reference, &Metric::absolute(1.0), &grid, c.lipschitz.n_mc, seed).num()?;
    let dmat = dependency::build_d(&l).num()?;
    let gamma = dependency::build_gamma(&dmat, c.rho_norm, d, c.mode).num()?;
    let mut outputs = Vec::new();
    let mut pairs = Vec::new();
    for p in &profiles {
        let name = format!("landscape_{}_{}.csv", p.i + 1, p.j + 1);
        p.landscapes[0].save_csv(&out.join(&name)).num()?;
        pairs.push(PairSummary {
            i: p.i + 1,
            j: p.j + 1,
            estimate: p.estimate,
            std_error: p.std_error,
            landscape_csv: name.clone(),
        });
        outputs.push(name);
    }
    fs::write(out.join("dependency.json"), gamma.to_json().num()? + "\n").num()?;
    outputs.push("dependency.json".into());
    outputs.push(write_json(out, "deps_report.json", &pairs)?);
    let summary = pairs
        .iter()
        .map(|p| format!("L{}{} = {:.4} ± {:.4}", p.i, p.j, p.estimate, p.std_error))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Run {
        config_bytes: loaded.bytes,
        seed,
        outputs,
        summary: if summary.is_empty() {
            "one-dimensional map: L is empty".into()
        } else {
            summary
        },
        failed_check: None,
    })
}

#[derive(Serialize)]
struct BadsetReport {
    n: usize,
    probe_points: usize,
    probe_n_mc: usize,
    degenerate_points: usize,
    selection: bad_set::Selection,
}

pub fn badset(cfg: Option<&Path>, seed: Option<u64>, out: &Path) -> Outcome<Run> {
    let loaded = config::load::<BadsetConfig>(cfg).cfg()?;
    let c = loaded.value;
    let seed = seed.or(c.seed).unwrap_or(0);
    let (_, map) = load_map(&loaded.dir, &c.map)?;
    let d = map.dim();
    let mut candidates = match config::resolve(&loaded.dir, &c.candidates) {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .with_context(|| format!("cannot read {}", p.display()))
                .cfg()?;
            bad_set::parse_candidates(&text).cfg()?
        }
        None => bad_set::banded_candidates(
            d,
            &c.banded.caps,
            &c.banded.bandwidths,
            c.epsilon,
            c.banded.weights.as_deref(),
        )
        .cfg()?,
    };
    if candidates.iter().any(|k| k.l.nrows() != d) {
        return Err(Failure::Config(anyhow!("candidate matrices must be {d}×{d}")));
    }
    let osc = OscillationVector::new(c.osc.clone().unwrap_or_else(|| vec![1.0 / d as f64; d])).cfg()?;
    let reference = ReferenceMeasure::uniform(d);
    let ctx = MembershipContext::new(
        &map,
        &reference,
        Metric::absolute(1.0),
        ProbeDesign { points: c.probe.points },
        c.probe.n_mc,
        derive_seed(seed, 1),
    )
    .num()?;
    let sample = pushforward_sample(&map, &reference, c.n, derive_seed(seed, 2)).num()?;
    let stats = ctx.statistics(&sample).num()?;
    let sel_ctx = SelectionContext {
        m: c.m,
        rho_norm: c.rho_norm,
        osc,
        kl: c.kl,
        delta: c.delta,
        empirical_risk: c.empirical_risk,
        mode: c.mode,
    };
    let selection = bad_set::select_candidate(&mut candidates, c.epsilon, &stats, &sel_ctx).num()?;
    let chosen = &selection.candidates[selection.chosen];
    let summary = format!(
        "chose candidate {} of {}: xi {:.4}, gap {:.4}, total {:.4}",
        selection.chosen,
        selection.candidates.len(),
        chosen.xi,
        chosen.gap,
        chosen.total
    );
    let report = BadsetReport {
        n: c.n,
        probe_points: c.probe.points,
        probe_n_mc: c.probe.n_mc,
        degenerate_points: stats.iter().filter(|s| s.degenerate).count(),
        selection,
    };
    let name = write_json(out, "badset_report.json", &report)?;
    Ok(Run {
        config_bytes: loaded.bytes,
        seed,
        outputs: vec![name],
        summary,
        failed_check: None,
    })
}
