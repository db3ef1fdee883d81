//! Distribution checks used by the validation harnesses: Kolmogorov-Smirnov
//! statistics with asymptotic critical values, and the standard normal CDF.

use statrs::function::erf::{erfc, erfc_inv};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample KS statistic `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let xs = sorted(xs);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0_f64, |acc, (i, &x)| {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        acc.max(hi).max(lo)
    })
}

/// Two-sample KS statistic `sup |F_n - G_m|`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let xs = sorted(xs);
    let ys = sorted(ys);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic constant `c(α) = sqrt(-ln(α/2) / 2)` of the Kolmogorov law.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Critical value of the one-sample statistic at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Critical value of the two-sample statistic at level `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ks_of_perfect_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert_relative_eq!(ks_statistic(&xs, |x| x), 0.0005, epsilon = 1e-12);
    }

    #[test]
    fn two_sample_of_disjoint_samples_is_one() {
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(ks_two_sample(&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1]), 0.0);
    }

    #[test]
    fn one_percent_coefficient() {
        assert_relative_eq!(ks_coefficient(0.01), 1.627_624, epsilon = 1e-6);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &x in &[-3.0, -0.5, 0.0, 1.2, 4.0] {
            assert_relative_eq!(normal_quantile(normal_cdf(x)), x, epsilon = 1e-9);
        }
        assert_relative_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-11);
    }
}
