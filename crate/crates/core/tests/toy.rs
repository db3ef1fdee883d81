use krcert::toy::{self, ImprovementContext, ToyParams, ToyResults};

fn small() -> ToyParams {
    ToyParams {
        grid: 16,
        n_mc: 512,
        seed: 4,
        n_tradeoff: 20_000,
        n_scatter: 2_000,
    }
}

#[test]
fn preset_round_trips_through_toml() {
    let text = toy::preset_file().to_toml().unwrap();
    let parsed = krcert::transport::MapFile::parse(&text, false).unwrap();
    assert_eq!(parsed, toy::preset_file());
    assert!(toy::build_toy_map(&toy::uniform_file()).is_ok());
}

#[test]
fn preset_scatter_is_bimodal() {
    let params = ToyParams {
        n_scatter: 5_000,
        ..small()
    };
    let r = toy::run_toy(&toy::preset_file(), &params, &ImprovementContext::default()).unwrap();
    assert_eq!(toy::count_modes(r.scatter.as_ref().unwrap(), 20), 2);
}

#[test]
fn seeds_change_outputs_and_threads_do_not() {
    let ctx = ImprovementContext::default();
    let a = toy::run_toy(&toy::preset_file(), &small(), &ctx).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| toy::run_toy(&toy::preset_file(), &small(), &ctx).unwrap());
    assert_eq!(a.landscape, b.landscape);
    assert_eq!(a.tradeoff, b.tradeoff);
    let c = toy::run_toy(&toy::preset_file(), &ToyParams { seed: 5, ..small() }, &ctx).unwrap();
    assert_ne!(a.landscape, c.landscape);
}

#[test]
fn tradeoff_ends_at_zero_mass() {
    let r = toy::run_toy(&toy::preset_file(), &small(), &ImprovementContext::default()).unwrap();
    let last = r.tradeoff.last().unwrap();
    assert!(last.cap >= r.landscape.as_ref().unwrap().max());
    assert_eq!(last.xi, 0.0);
    assert_eq!(r.tradeoff[0].xi, 1.0);
}

#[test]
fn empty_results_write_a_manifest_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let empty = ToyResults {
        params: None,
        map: None,
        landscape: None,
        tradeoff: Vec::new(),
        scatter: None,
        improvement: None,
    };
    let emitted = toy::emit_figures(&empty, dir.path()).unwrap();
    assert!(!emitted.warnings.is_empty());
    assert!(dir.path().join(toy::MANIFEST_JSON).exists());
    assert!(!dir.path().join(toy::LANDSCAPE_CSV).exists());
}
