use krcert::certificate::{beta_schedule, certify, j_star, CertificateInput};
use krcert::dependency::{OscillationVector, ScaleMode};
use proptest::prelude::*;

fn input(m: usize, d: usize, kl: f64, delta: f64, osc: f64) -> CertificateInput {
    CertificateInput {
        m,
        d,
        rho_norm: 1.0,
        dmat: (0..d)
            .map(|i| (0..d).map(|j| if j >= i { 0.5 } else { 0.0 }).collect())
            .collect(),
        osc: OscillationVector::constant(d, osc).unwrap(),
        kl,
        delta,
        xi: 0.01,
        empirical_risk: 0.2,
    }
}

proptest! {
    #[test]
    fn gap_shrinks_with_more_data(m in 1usize..10_000, d in 1usize..12, kl in 0.0f64..50.0, delta in 0.001f64..0.5) {
        let a = certify(&input(m, d, kl, delta, 0.3), ScaleMode::Paper).unwrap();
        let b = certify(&input(4 * m, d, kl, delta, 0.3), ScaleMode::Paper).unwrap();
        prop_assert!((a.gap - 2.0 * b.gap).abs() <= 1e-12 * a.gap);
        prop_assert!((a.total - (0.2 + a.gap + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn conservative_mode_scales_by_d(m in 1usize..1000, d in 1usize..12, kl in 0.0f64..50.0) {
        let p = certify(&input(m, d, kl, 0.05, 0.3), ScaleMode::Paper).unwrap();
        let c = certify(&input(m, d, kl, 0.05, 0.3), ScaleMode::Conservative).unwrap();
        prop_assert!((c.gap - d as f64 * p.gap).abs() <= 1e-12 * c.gap);
    }

    #[test]
    fn schedule_doubles_and_halves(kl in 0.0f64..1e4, delta in 1e-6f64..0.9, m in 1usize..1000) {
        let j = j_star(kl, delta).unwrap();
        let steps = beta_schedule(delta, m, 1.3, j).unwrap();
        prop_assert_eq!(steps.len(), j + 1);
        for w in steps.windows(2) {
            prop_assert!((w[1].beta_j - 2.0 * w[0].beta_j).abs() <= 1e-12 * w[1].beta_j);
            prop_assert!((w[0].delta_j - 2.0 * w[1].delta_j).abs() <= 1e-15);
        }
        let spent: f64 = steps.iter().map(|s| s.delta_j).sum();
        prop_assert!(spent < delta);
    }
}

#[test]
fn zero_oscillation_gives_zero_gap() {
    let r = certify(&input(10, 3, 1.0, 0.05, 0.0), ScaleMode::Paper).unwrap();
    assert_eq!(r.gap, 0.0);
    assert!(r.beta_schedule.is_empty() && r.beta_star.is_none());
}
