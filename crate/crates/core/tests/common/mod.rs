//! Shared helpers for the integration suites: Kolmogorov-Smirnov distances
//! and the asymptotic Kolmogorov tail used to turn them into p-values.

#![allow(dead_code)] // each test binary uses its own subset

/// One-sample KS distance between `sorted` data and a reference CDF.
pub fn ks_distance_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample KS distance between two sorted samples.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function: P(sup |B(t)| > x) with the
/// alternating-series form, accurate for the p > 1e-6 range used here.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..101 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a one-sample KS distance at sample size n.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    kolmogorov_sf((n as f64).sqrt() * d)
}

/// p-value for a two-sample KS distance via the effective sample size.
pub fn ks_p_value_two_sample(d: f64, na: usize, nb: usize) -> f64 {
    let n_eff = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    kolmogorov_sf(n_eff.sqrt() * d)
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    let n = xs.len() as f64;
    let cov = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0);
    cov / (vx * vy).sqrt()
}
