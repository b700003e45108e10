//! Sample statistics: moments with standard errors, Kolmogorov–Smirnov tests,
//! the fourth-moment gap and least-squares slopes.

use serde::Serialize;

use crate::error::{domain, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Small-λ form of the CDF converges much faster there.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let cdf: f64 = (1..=6)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum::<f64>()
            * c;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic `d` with effective sample size `n`,
/// using Stephens' finite-sample scaling `(√n + 0.12 + 0.11/√n)·d`.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let rn = n.sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

/// Asymptotic one-sample KS critical value at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p: f64,
}

/// One-sample KS test of already standardized samples against `N(0, 1)`.
pub fn ks_normal(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(domain("KS test needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(domain("KS test input contains NaN"));
    }
    if samples.len() < 8 && samples.iter().all(|&x| x == samples[0]) {
        return Err(domain("KS test on fewer than 8 identical samples is meaningless"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsResult { statistic, p: ks_p_value(statistic, n) })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("two-sample KS test needs two non-empty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsResult { statistic: d, p: ks_p_value(d, n * m / (n + m)) })
}

/// `m₄ − 3m₂²` with raw moments about 0, and its delta-method standard error.
pub fn fourth_moment_gap(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 8 {
        return Err(domain(format!("fourth-moment gap needs at least 8 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    let gap = m4 - 3.0 * m2 * m2;
    // Influence function of (m₂, m₄) ↦ m₄ − 3m₂².
    let infl: Vec<f64> = samples.iter().map(|x| x.powi(4) - 6.0 * m2 * x * x).collect();
    Ok((gap, mean_se(&infl).1))
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample covariance and an influence-function standard error.
pub fn covariance_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let (m, se) = mean_se(&prods);
    (m * n / (n - 1.0), se)
}

/// Unbiased sample variance and its standard error.
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    covariance_se(xs, xs)
}

/// Ratio `Cov(x, y) / Var(x)` (the regression slope of `y` on `x`) with a
/// delta-method standard error.
pub fn regression_ratio_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (vx, _) = variance_se(xs);
    let (cxy, _) = covariance_se(xs, ys);
    let beta = cxy / vx;
    let infl: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let dx = x - mx;
            dx * ((y - my) - beta * dx) / vx
        })
        .collect();
    (beta, mean_se(&infl).1)
}

/// Ordinary least-squares fit `y ≈ a + b·x`; returns `(b, a)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(domain("least-squares fit needs at least 2 paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("least-squares fit needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_relative_eq;

    /// Acklam-style bisection inverse of `normal_cdf`, good enough for fixtures.
    fn inv_cdf(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ks_examples() {
        assert!(ks_normal(&[]).is_err());
        assert!(ks_normal(&[1.0; 5]).is_err());
        let r = ks_normal(&[0.0; 10]).unwrap();
        assert_eq!(r.statistic, 0.5);
        let xs: Vec<f64> = (1..=100).map(|i| inv_cdf((i as f64 - 0.5) / 100.0)).collect();
        assert_relative_eq!(ks_normal(&xs).unwrap().statistic, 0.005, max_relative = 1e-9);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are valid near the switch point.
        let l = 1.18;
        let mut alt = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let t = (-2.0 * jf * jf * l * l).exp();
            alt += if j % 2 == 1 { t } else { -t };
        }
        assert_relative_eq!(kolmogorov_sf(l - 1e-12), 2.0 * alt, max_relative = 1e-8);
        assert_relative_eq!(kolmogorov_sf(1.3580986), 0.05, max_relative = 1e-4);
        assert_relative_eq!(kolmogorov_sf(0.5), 0.963945, max_relative = 1e-5);
    }

    #[test]
    fn ks_uniformity_of_normal_draws() {
        let mut s = Stream::from_seed(5);
        let xs: Vec<f64> = (0..5000).map(|_| s.normal()).collect();
        let r = ks_normal(&xs).unwrap();
        assert!(r.p > 0.01, "{r:?}");
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.2).collect();
        assert!(ks_normal(&shifted).unwrap().p < 1e-6);
        let ys: Vec<f64> = (0..5000).map(|_| s.normal()).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p > 0.01);
        assert!(ks_two_sample(&xs, &shifted).unwrap().p < 1e-3);
    }

    #[test]
    fn fourth_moment_gap_examples() {
        let pm: Vec<f64> = [1.0, -1.0].repeat(4);
        assert_eq!(fourth_moment_gap(&pm).unwrap().0, -2.0);
        assert_eq!(fourth_moment_gap(&[2.0; 8]).unwrap().0, -2.0 * 16.0);
        assert!(fourth_moment_gap(&[1.0, -1.0]).is_err());
        let mut s = Stream::from_seed(77);
        let xs: Vec<f64> = (0..100_000).map(|_| s.normal()).collect();
        let (gap, se) = fourth_moment_gap(&xs).unwrap();
        assert!(gap.abs() < 3.0 * se, "gap {gap} se {se}");
    }

    #[test]
    fn ols_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (b, a) = ols(&x, &y).unwrap();
        assert_relative_eq!(b, -0.5, max_relative = 1e-14);
        assert_relative_eq!(a, 3.0, max_relative = 1e-14);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn critical_value_matches_table() {
        assert_relative_eq!(ks_critical_value(1, 0.01), 1.6276, max_relative = 1e-4);
    }

    proptest::proptest! {
        #[test]
        fn ks_statistic_in_unit_interval(xs in proptest::collection::vec(-10.0f64..10.0, 8..64)) {
            let r = ks_normal(&xs).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&r.statistic));
            proptest::prop_assert!((0.0..=1.0).contains(&r.p));
        }
    }
}
