//! Hypothesis testing: asymptotic normal calibration and Monte Carlo
//! calibration under the uniform null.

use crate::accum::par_map_collect;
use crate::asymptotics::KernelMoments;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::sampling::{sample_uniform, RngSpec};
use crate::spacings::{Scheme, SpacingsConfig};
use crate::special::norm_cdf;
use crate::statistics::{statistic_for, StatisticKind, StatisticValue};
use serde::{Deserialize, Serialize};

/// Rejection direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Upper,
    Lower,
    TwoSided,
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Tail::Upper),
            "lower" => Ok(Tail::Lower),
            "two-sided" | "two_sided" => Ok(Tail::TwoSided),
            other => Err(Error::UnsupportedFamily {
                spec: format!("tail `{other}` (expected upper|lower|two-sided)"),
            }),
        }
    }
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tail::Upper => "upper",
            Tail::Lower => "lower",
            Tail::TwoSided => "two-sided",
        })
    }
}

/// How the null distribution was calibrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Asymptotic,
    MonteCarlo,
}

/// Test provenance carried alongside every result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestMeta {
    pub m: usize,
    pub n: usize,
    pub scheme: Scheme,
    pub kernel: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<RngSpec>,
}

/// Outcome of a goodness-of-fit test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    /// Standardized statistic; present only for the asymptotic method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    pub p_value: f64,
    pub tail: Tail,
    pub method: TestMethod,
    pub alpha: f64,
    pub reject: bool,
    pub metadata: TestMeta,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadProbability { p: alpha });
    }
    Ok(())
}

/// Calibrate a second-order statistic by its normal limit:
/// z = sqrt(n) (W - theta) / sigma.
pub fn asymptotic_test(
    s: &StatisticValue,
    moments: &KernelMoments,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if s.kind != StatisticKind::SecondOrder {
        return Err(Error::StatisticKindMismatch {
            expected: StatisticKind::SecondOrder.name(),
            found: s.kind.name(),
        });
    }
    if s.kernel_label != moments.kernel {
        return Err(Error::KernelMismatch {
            expected: moments.kernel.clone(),
            found: s.kernel_label.clone(),
        });
    }
    if s.m != moments.m {
        return Err(Error::TableMismatch {
            detail: format!("moments are for m={}, statistic has m={}", moments.m, s.m),
        });
    }
    if !(moments.sigma2 > 0.0) {
        return Err(Error::DegenerateVariance {
            sigma2: moments.sigma2,
        });
    }
    let z = (s.n as f64).sqrt() * (s.value - moments.theta) / moments.sigma2.sqrt();
    let p_value = match tail {
        Tail::Upper => 1.0 - norm_cdf(z),
        Tail::Lower => norm_cdf(z),
        Tail::TwoSided => 2.0 * (1.0 - norm_cdf(z.abs())),
    };
    Ok(TestResult {
        statistic: s.value,
        z_score: Some(z),
        p_value,
        tail,
        method: TestMethod::Asymptotic,
        alpha,
        reject: p_value < alpha,
        metadata: TestMeta {
            m: s.m,
            n: s.n,
            scheme: s.scheme,
            kernel: s.kernel_label.clone(),
            seed: None,
        },
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo calibration

/// One (probability, quantile) pair of a critical table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub prob: f64,
    pub value: f64,
}

/// Null distribution of a statistic simulated under the uniform null.
///
/// Carries both summary quantiles and the full sorted null sample, so tests
/// against it can compute exact rank p-values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalTable {
    pub n: usize,
    pub m: usize,
    pub scheme: Scheme,
    pub kernel: String,
    pub reps: usize,
    pub seed: RngSpec,
    pub quantiles: Vec<QuantilePoint>,
    /// Absent in trimmed serialized forms; rank-based testing against a
    /// table without samples fails with a table mismatch.
    #[serde(default)]
    pub samples: Vec<f64>,
}

/// Minimum replication count for a usable critical table.
const CRITICAL_MIN_REPS: usize = 1000;

/// Linear-interpolation ("type 7") quantile of a sorted slice:
/// h = (len-1) p, result = x[floor h] + frac(h) * (x[floor h + 1] - x[floor h]).
pub fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Simulate the null distribution of a statistic and extract quantiles.
///
/// Replication i draws its sample from `seed.substream(i)`; the result is
/// bit-identical for a fixed seed regardless of thread count.
pub fn mc_critical(
    n: usize,
    m: usize,
    scheme: Scheme,
    kernel: &KernelSpec,
    probs: &[f64],
    reps: usize,
    seed: RngSpec,
) -> Result<CriticalTable> {
    if reps < CRITICAL_MIN_REPS {
        return Err(Error::InsufficientReps {
            reps,
            min: CRITICAL_MIN_REPS,
        });
    }
    if n < 2 {
        return Err(Error::OrderTooLarge { m, n });
    }
    for &p in probs {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::BadProbability { p });
        }
    }
    let cfg = SpacingsConfig::new(m, scheme);
    // Surface bad (m, n) combinations before burning replications.
    let probe = sample_uniform(n - 1, seed)?;
    statistic_for(kernel, &cfg.scaled_spacings(&probe)?)?;

    let mut samples = par_map_collect(reps, |i| {
        let s = sample_uniform(n - 1, seed.substream(i as u64)).expect("n >= 2");
        let v = cfg.scaled_spacings(&s).expect("validated above");
        statistic_for(kernel, &v).expect("validated above").value
    });
    samples.sort_unstable_by(f64::total_cmp);

    let mut sorted_probs: Vec<f64> = probs.to_vec();
    sorted_probs.sort_unstable_by(f64::total_cmp);
    let quantiles = sorted_probs
        .iter()
        .map(|&p| QuantilePoint {
            prob: p,
            value: type7_quantile(&samples, p),
        })
        .collect();

    Ok(CriticalTable {
        n,
        m,
        scheme,
        kernel: kernel.label(),
        reps,
        seed,
        quantiles,
        samples,
    })
}

/// Test a statistic against a simulated null distribution.
///
/// p-values use the add-one rank convention p = (1 + #{null as extreme}) /
/// (reps + 1), which keeps them strictly positive and valid for any reps.
pub fn mc_test(
    s: &StatisticValue,
    table: &CriticalTable,
    tail: Tail,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if s.kernel_label != table.kernel {
        return Err(Error::KernelMismatch {
            expected: table.kernel.clone(),
            found: s.kernel_label.clone(),
        });
    }
    if s.m != table.m || s.n != table.n || s.scheme != table.scheme {
        return Err(Error::TableMismatch {
            detail: format!(
                "table is for (m={}, n={}, {}), statistic has (m={}, n={}, {})",
                table.m, table.n, table.scheme, s.m, s.n, s.scheme
            ),
        });
    }
    let reps = table.samples.len();
    if reps != table.reps {
        return Err(Error::TableMismatch {
            detail: format!(
                "table claims {} replications but holds {} samples",
                table.reps, reps
            ),
        });
    }
    let count_lt = table.samples.partition_point(|&x| x < s.value);
    let count_le = table.samples.partition_point(|&x| x <= s.value);
    let count_ge = reps - count_lt;
    let denom = (reps + 1) as f64;
    let p_upper = (1 + count_ge) as f64 / denom;
    let p_lower = (1 + count_le) as f64 / denom;
    let p_value = match tail {
        Tail::Upper => p_upper,
        Tail::Lower => p_lower,
        Tail::TwoSided => (2.0 * p_upper.min(p_lower)).min(1.0),
    };
    Ok(TestResult {
        statistic: s.value,
        z_score: None,
        p_value,
        tail,
        method: TestMethod::MonteCarlo,
        alpha,
        reject: p_value < alpha,
        metadata: TestMeta {
            m: s.m,
            n: s.n,
            scheme: s.scheme,
            kernel: s.kernel_label.clone(),
            seed: Some(table.seed),
        },
    })
}

// ---------------------------------------------------------------------------
