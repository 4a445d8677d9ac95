//! Distributional integration checks. Every test here is a statistical
//! assertion with a documented tolerance: bounds sit at 3-5 standard errors
//! (or at KS levels of about 1e-3) under fixed seeds, so failures indicate
//! real regressions rather than unlucky draws.

mod common;

use common::*;
use spacings_gof::asymptotics::{moments, MomentMode};
use spacings_gof::inference::mc_test;
use spacings_gof::sampling::{gamma_windows, sample_uniform};
use spacings_gof::special::beta_reg;
use spacings_gof::{
    make_gini, mc_critical, run_power_study, statistic_for, u_stat_naive, Alternative, KernelSpec,
    PowerStudyConfig, RngSpec, Scheme, SpacingsConfig, Tail,
};

/// The first overlapping m-spacing is the m-th order statistic of the
/// n - 1 observations, hence exactly Beta(m, n - m) under the null. KS
/// check across 20000 independent replications; the 1e-3 critical value
/// at this sample size is 0.0138.
#[test]
fn first_spacing_follows_exact_beta_law() {
    let (n, m, reps) = (50usize, 3usize, 20_000usize);
    let cfg = SpacingsConfig::new(m, Scheme::Overlapping);
    let seed = RngSpec::new(0xBE7A, 0);
    let mut firsts: Vec<f64> = (0..reps)
        .map(|i| {
            let s = sample_uniform(n - 1, seed.substream(i as u64)).unwrap();
            cfg.spacings(&s).unwrap().values()[0]
        })
        .collect();
    firsts.sort_unstable_by(f64::total_cmp);
    let d = ks_distance_cdf(&firsts, |x| beta_reg(m as f64, (n - m) as f64, x));
    let p = ks_p_value(d, reps);
    assert!(p > 1e-3, "KS distance {d:.4} (p = {p:.2e}) against Beta({m}, {})", n - m);
}

/// Stationary gamma windows of order m have autocovariance m - l at lag l
/// and 0 beyond. Estimated from one long path of 1e6 windows; tolerance
/// 0.05 is about 5 standard errors for m <= 3.
#[test]
fn gamma_window_autocovariance_is_triangular() {
    for m in [2usize, 3] {
        let len = 1_000_000usize;
        let seq = gamma_windows(m, len, RngSpec::new(0x9A77A, m as u64)).unwrap();
        let w = seq.windows();
        let mean = w.iter().sum::<f64>() / len as f64;
        for lag in 0..=m + 1 {
            let count = len - lag;
            let acov = (0..count)
                .map(|i| (w[i] - mean) * (w[i + lag] - mean))
                .sum::<f64>()
                / count as f64;
            let expected = m.saturating_sub(lag) as f64;
            assert!(
                (acov - expected).abs() < 0.05,
                "m={m} lag={lag}: {acov} vs {expected}"
            );
        }
    }
}

/// The mean of the pair statistic over many null samples approaches the
/// gamma-window moment theta. Tolerance combines 3 standard errors of each
/// estimate with an O(m/n) allowance for the finite-n boundary bias.
#[test]
fn pair_statistic_mean_matches_window_moment() {
    let (m, n, reps) = (2usize, 3000usize, 400usize);
    let h = make_gini(1.0).unwrap();
    let km = moments(
        &h,
        m,
        MomentMode::MonteCarlo {
            reps: 1_000_000,
            spec: RngSpec::new(0x717A, 0),
        },
    )
    .unwrap();

    let seed = RngSpec::new(0x717B, 0);
    let cfg = SpacingsConfig::new(m, Scheme::Overlapping);
    let values: Vec<f64> = (0..reps)
        .map(|i| {
            let s = sample_uniform(n - 1, seed.substream(i as u64)).unwrap();
            u_stat_naive(&cfg.scaled_spacings(&s).unwrap(), &h).unwrap().value
        })
        .collect();
    let (w_mean, _) = mean_var(&values);

    let se_w = (km.sigma2 / n as f64 / reps as f64).sqrt();
    let se_theta = km.mc_std_errors.as_ref().unwrap().theta;
    let tol = 3.0 * (se_w + se_theta) + 10.0 * m as f64 / n as f64;
    assert!(
        (w_mean - km.theta).abs() < tol,
        "mean {w_mean} vs theta {} (tol {tol})",
        km.theta
    );
}

/// Monte Carlo test calibration: fresh null data is rejected at close to
/// the nominal rate, and its p-values are close to uniform. The rate band
/// is 3 binomial SEs plus table noise; the KS band corresponds to a 1e-3
/// level at 1e4 replications.
#[test]
fn null_rejection_rate_and_p_values_are_calibrated() {
    let (n, m) = (50usize, 1usize);
    let spec = KernelSpec::Gini { r: 2.0 };
    let table = mc_critical(
        n,
        m,
        Scheme::Overlapping,
        &spec,
        &[0.05, 0.95],
        5000,
        RngSpec::new(0xCA11, 0),
    )
    .unwrap();

    let fresh = RngSpec::new(0xCA12, 0);
    let reps = 10_000usize;
    let cfg = SpacingsConfig::new(m, Scheme::Overlapping);
    let mut p_values = Vec::with_capacity(reps);
    let mut rejections = 0usize;
    for i in 0..reps {
        let s = sample_uniform(n - 1, fresh.substream(i as u64)).unwrap();
        let stat = statistic_for(&spec, &cfg.scaled_spacings(&s).unwrap()).unwrap();
        let res = mc_test(&stat, &table, Tail::Upper, 0.05).unwrap();
        rejections += usize::from(res.reject);
        p_values.push(res.p_value);
    }
    let rate = rejections as f64 / reps as f64;
    assert!((rate - 0.05).abs() < 0.02, "size {rate}");

    p_values.sort_unstable_by(f64::total_cmp);
    let d = ks_distance_cdf(&p_values, |p| p.clamp(0.0, 1.0));
    assert!(d < 0.02, "p-value uniformity KS {d}");
}

/// Asymptotic and Monte Carlo calibration meet at large n: for the square
/// kernel at m = 1 (theta = 2, sigma = 4), the simulated upper 5% point at
/// n = 2000 sits within 0.02 of 2 + 1.645 * 4 / sqrt(2000).
#[test]
fn mc_critical_value_matches_normal_limit() {
    let n = 2000usize;
    let table = mc_critical(
        n,
        1,
        Scheme::Overlapping,
        &KernelSpec::Gini { r: 2.0 },
        &[0.95],
        100_000,
        RngSpec::new(0xA57, 0),
    )
    .unwrap();
    let q95 = table.quantiles[0].value;
    let predicted = 2.0 + 1.645 * 4.0 / (n as f64).sqrt();
    assert!(
        (q95 - predicted).abs() < 0.02,
        "q95 {q95} vs normal prediction {predicted}"
    );
}

/// Power smoke at the published design size (n = 50, upper 5%): strongly
/// non-uniform alternatives are detected, the null is rejected at the
/// nominal rate, and a mid-table cell lands in its documented band. Bands
/// are 3-4 binomial SEs at 2000 replications around table-scale values.
#[test]
fn power_landscape_smoke() {
    let cfg = PowerStudyConfig {
        n: 50,
        alpha: 0.05,
        reps: 2000,
        critical_reps: 5000,
        alternatives: vec![
            Alternative::Uniform,
            Alternative::Beta { a: 0.5, b: 0.5 },
            Alternative::Beta { a: 1.0, b: 3.0 },
        ],
        m_values: vec![1, 4],
        r_values: vec![1.0, 2.0],
        schemes: vec![Scheme::Overlapping],
        tail: Tail::Upper,
        seed: RngSpec::new(0x50F7, 0),
    };
    let study = run_power_study(&cfg).unwrap();
    let cell = |alt: usize, m: usize, r: f64| {
        study.tables[alt]
            .rows
            .iter()
            .find(|row| row.m == m && row.r == r)
            .unwrap()
            .power
    };
    for &(m, r) in &[(1, 1.0), (1, 2.0), (4, 1.0), (4, 2.0)] {
        let size = cell(0, m, r);
        assert!((size - 0.05).abs() < 0.02, "size {size} at m={m} r={r}");
    }
    assert!(cell(2, 1, 1.0) > 0.9, "beta(1,3) m=1 r=1: {}", cell(2, 1, 1.0));
    let mid = cell(1, 4, 2.0); // beta(0.5,0.5), documented power about 0.71
    assert!((0.6..0.82).contains(&mid), "beta(0.5,0.5) m=4 r=2: {mid}");
}

/// Critical tables are bitwise identical however many rayon workers run.
#[test]
fn critical_tables_do_not_depend_on_thread_count() {
    let build = || {
        mc_critical(
            30,
            2,
            Scheme::Disjoint,
            &KernelSpec::Gini { r: 1.5 },
            &[0.05, 0.95],
            2000,
            RngSpec::new(0x7EAD, 7),
        )
        .unwrap()
    };
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(build);
    let threaded = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(build);
    assert_eq!(serial.samples, threaded.samples);
    assert_eq!(
        serial.quantiles[0].value, threaded.quantiles[0].value
    );
}

/// At any order the square-kernel pair statistic is asymptotically an
/// affine function of the order-m Greenwood statistic; at n = 2000 their
/// correlation across replications is already nearly 1.
#[test]
fn square_kernel_tracks_greenwood_at_higher_order() {
    let (n, m, reps) = (2000usize, 3usize, 300usize);
    let seed = RngSpec::new(0x9EE4, 0);
    let cfg = SpacingsConfig::new(m, Scheme::Overlapping);
    let mut u_vals = Vec::with_capacity(reps);
    let mut g_vals = Vec::with_capacity(reps);
    for i in 0..reps {
        let s = sample_uniform(n - 1, seed.substream(i as u64)).unwrap();
        let v = cfg.scaled_spacings(&s).unwrap();
        u_vals.push(statistic_for(&KernelSpec::Gini { r: 2.0 }, &v).unwrap().value);
        g_vals.push(statistic_for(&KernelSpec::Greenwood, &v).unwrap().value);
    }
    let rho = correlation(&u_vals, &g_vals);
    assert!(rho > 0.95, "correlation {rho}");
}
