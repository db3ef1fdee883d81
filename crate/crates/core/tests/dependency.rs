use krcert::dependency::{
    build_d, build_gamma, couple, local_oscillation, DependencyMatrix, Metric, OscillationDesign, OscillationVector,
    PairSampling, ScaleMode,
};
use krcert::transport::{ReferenceMeasure, TriangularMap};
use ndarray::array;

#[test]
fn linear_statistic_has_weight_oscillations() {
    let w = [0.5, -2.0, 1.25];
    let f = |z: &[f64]| z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let design = OscillationDesign::unit_cube(3, PairSampling::Random { pairs: 500 });
    for (site, wi) in w.iter().enumerate() {
        let est = local_oscillation(&f, site, &Metric::absolute(1.0), &design, 3).unwrap();
        assert!((est.value - wi.abs()).abs() < 1e-9, "site {site}: {}", est.value);
        assert!(est.is_lower_bound);
    }
}

#[test]
fn coupling_shares_the_reference_draw() {
    let f = TriangularMap::identity(2);
    let joint = couple(&f, &f, &ReferenceMeasure::uniform(2), 1000, 8).unwrap();
    for r in joint.rows() {
        assert_eq!(r[0], r[2]);
        assert_eq!(r[1], r[3]);
    }
}

#[test]
fn dependency_matrix_round_trips_through_json() {
    let l = array![[0.0, 0.4, 0.1], [0.0, 0.0, 0.3], [0.0, 0.0, 0.0]];
    let d = build_d(&l).unwrap();
    let g = build_gamma(&d, 2.0, 3, ScaleMode::Paper).unwrap();
    let back = DependencyMatrix::from_json(&g.to_json().unwrap()).unwrap();
    assert_eq!(back.gamma, g.gamma);
    let osc = OscillationVector::constant(3, 1.0).unwrap();
    // Γδ = (2/3)·(1.5, 1.3, 1)
    let want = (4.0 / 9.0) * (1.5f64.powi(2) + 1.3f64.powi(2) + 1.0);
    assert!((g.gamma_delta_norm_sq(&osc).unwrap() - want).abs() < 1e-12);
    let c = g.with_mode(ScaleMode::Conservative);
    assert!((c.gamma_delta_norm_sq(&osc).unwrap() - 9.0 * want).abs() < 1e-11);
}
