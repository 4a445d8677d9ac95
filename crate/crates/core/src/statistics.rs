//! Exact evaluation of first- and second-order spacing statistics.
//!
//! Second-order: W = (2 / (N(N-1))) * sum_{i<j} h(d_i, d_j) over the N
//! scaled spacings. First-order: V = (1/n) * sum_i g(d_i) — the divisor is
//! the sample-size parameter n, not the number of spacings.

use crate::accum::{sum_compensated, CompensatedSum};
use crate::error::{Error, Result};
use crate::kernels::{make_power_scalar, KernelSpec, ScalarKernel, SymmetricKernel};
use crate::spacings::{Scheme, SpacingsVector};
use serde::{Deserialize, Serialize};

/// Whether a statistic averages a kernel over single spacings or pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    FirstOrder,
    SecondOrder,
}

impl StatisticKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::FirstOrder => "first_order",
            StatisticKind::SecondOrder => "second_order",
        }
    }
}

/// A computed statistic together with everything needed to calibrate it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    pub kind: StatisticKind,
    pub kernel_label: String,
    pub m: usize,
    pub n: usize,
    pub scheme: Scheme,
}

fn require_scaled(v: &SpacingsVector) -> Result<()> {
    if !v.is_scaled() {
        return Err(Error::NotScaled);
    }
    Ok(())
}

/// Evaluate the second-order statistic by summing the kernel over all
/// spacing pairs. O(N^2) but exact for any symmetric kernel.
pub fn u_stat_naive(v: &SpacingsVector, h: &SymmetricKernel) -> Result<StatisticValue> {
    require_scaled(v)?;
    let d = v.values();
    let big_n = d.len();
    if big_n < 2 {
        return Err(Error::TooFewSpacings { len: big_n });
    }
    let mut acc = CompensatedSum::new();
    for i in 0..big_n {
        for j in (i + 1)..big_n {
            acc.add(h.eval(d[i], d[j]));
        }
    }
    let pairs = 0.5 * big_n as f64 * (big_n - 1) as f64;
    Ok(StatisticValue {
        value: acc.total() / pairs,
        kind: StatisticKind::SecondOrder,
        kernel_label: h.label().to_string(),
        m: v.m(),
        n: v.n(),
        scheme: v.scheme(),
    })
}

/// Exponents with an O(N log N) pair-sum identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastGini {
    R1,
    R2,
}

impl FastGini {
    fn exponent(&self) -> f64 {
        match self {
            FastGini::R1 => 1.0,
            FastGini::R2 => 2.0,
        }
    }
}

/// Evaluate |x-y|^r statistics for r in {1, 2} without forming pairs.
///
/// r = 2: sum_{i<j} (d_i - d_j)^2 = N * sum d^2 - (sum d)^2, computed on
/// mean-centred values so the two terms cannot cancel.
/// r = 1: sort, then sum over ranks k of (2k - N - 1) * d_(k).
pub fn u_stat_fast(v: &SpacingsVector, r: FastGini) -> Result<StatisticValue> {
    require_scaled(v)?;
    let d = v.values();
    let big_n = d.len();
    if big_n < 2 {
        return Err(Error::TooFewSpacings { len: big_n });
    }
    let nf = big_n as f64;
    let mean = sum_compensated(d.iter().copied()) / nf;
    let pair_sum = match r {
        FastGini::R2 => {
            let mut sq = CompensatedSum::new();
            let mut lin = CompensatedSum::new();
            for &x in d {
                let y = x - mean;
                sq.add(y * y);
                lin.add(y);
            }
            let residual = lin.total();
            nf * sq.total() - residual * residual
        }
        FastGini::R1 => {
            // Centring leaves the sum unchanged (the rank weights sum to 0)
            // but keeps the positive and negative halves the same size.
            let mut sorted: Vec<f64> = d.iter().map(|&x| x - mean).collect();
            sorted.sort_unstable_by(f64::total_cmp);
            let mut acc = CompensatedSum::new();
            for (k, &x) in sorted.iter().enumerate() {
                let weight = (2 * (k + 1)) as f64 - nf - 1.0;
                acc.add(weight * x);
            }
            acc.total()
        }
    };
    let pairs = 0.5 * nf * (big_n - 1) as f64;
    // The pair sum of |x-y|^r is nonnegative by construction; trim float dust.
    let value = (pair_sum / pairs).max(0.0);
    Ok(StatisticValue {
        value,
        kind: StatisticKind::SecondOrder,
        kernel_label: format!("gini:r={}", r.exponent()),
        m: v.m(),
        n: v.n(),
        scheme: v.scheme(),
    })
}

/// First-order statistic V = (1/n) sum_i g(d_i).
pub fn v_stat(v: &SpacingsVector, g: &ScalarKernel) -> Result<StatisticValue> {
    require_scaled(v)?;
    let d = v.values();
    if d.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = sum_compensated(d.iter().map(|&x| g.eval(x)));
    Ok(StatisticValue {
        value: total / v.n() as f64,
        kind: StatisticKind::FirstOrder,
        kernel_label: g.label().to_string(),
        m: v.m(),
        n: v.n(),
        scheme: v.scheme(),
    })
}

/// Dispatch a named kernel to its preferred evaluator.
pub fn statistic_for(spec: &KernelSpec, v: &SpacingsVector) -> Result<StatisticValue> {
    match spec {
        KernelSpec::Gini { r } if *r == 1.0 => u_stat_fast(v, FastGini::R1),
        KernelSpec::Gini { r } if *r == 2.0 => u_stat_fast(v, FastGini::R2),
        KernelSpec::Gini { r } => {
            let h = crate::kernels::make_gini(*r)?;
            u_stat_naive(v, &h)
        }
        KernelSpec::Greenwood => {
            let g = make_power_scalar(2.0).expect("exponent 2 is valid");
            let mut out = v_stat(v, &g)?;
            out.kernel_label = spec.label();
            Ok(out)
        }
        KernelSpec::SymSq => {
            let h = crate::kernels::symmetrize(make_power_scalar(2.0).expect("exponent 2 is valid"));
            let mut out = u_stat_naive(v, &h)?;
            out.kernel_label = spec.label();
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_gini, symmetrize};
    use crate::spacings::{overlapping_spacings, Sample};
    use approx::assert_abs_diff_eq;

    fn scaled_example() -> SpacingsVector {
        // Scaled simple spacings of the (0.2, 0.5, 0.9) sample: 0.8 1.2 1.6 0.4
        let s = Sample::from_observations(&[0.2, 0.5, 0.9]).unwrap();
        overlapping_spacings(&s, 1).unwrap().scale().unwrap()
    }

    #[test]
    fn naive_gini_two_frozen_value() {
        let v = scaled_example();
        let h = make_gini(2.0).unwrap();
        let got = u_stat_naive(&v, &h).unwrap();
        assert_abs_diff_eq!(got.value, 2.0 * 3.2 / 12.0, epsilon = 1e-15);
        assert_eq!(got.kind, StatisticKind::SecondOrder);
        assert_eq!(got.kernel_label, "gini:r=2");
    }

    #[test]
    fn naive_on_constant_vector_is_zero() {
        let v = SpacingsVector::from_scaled_values(vec![1.0; 6], 1, 6, Scheme::Overlapping).unwrap();
        let h = make_gini(2.0).unwrap();
        assert_eq!(u_stat_naive(&v, &h).unwrap().value, 0.0);
    }

    #[test]
    fn naive_symmetrized_square_frozen_value() {
        let v = scaled_example();
        let h = symmetrize(make_power_scalar(2.0).unwrap());
        let got = u_stat_naive(&v, &h).unwrap();
        assert_abs_diff_eq!(got.value, 1.2, epsilon = 1e-15);
    }

    #[test]
    fn fast_gini_one_frozen_value() {
        let v = scaled_example();
        let got = u_stat_fast(&v, FastGini::R1).unwrap();
        assert_abs_diff_eq!(got.value, 2.0 * 4.0 / 12.0, epsilon = 1e-14);
        assert_eq!(got.kernel_label, "gini:r=1");
    }

    #[test]
    fn fast_gini_two_matches_naive_on_example() {
        let v = scaled_example();
        let fast = u_stat_fast(&v, FastGini::R2).unwrap();
        assert_abs_diff_eq!(fast.value, 2.0 * 3.2 / 12.0, epsilon = 1e-14);
        assert_eq!(fast.kernel_label, "gini:r=2");
    }

    #[test]
    fn fast_on_two_equal_spacings_is_zero() {
        let v = SpacingsVector::from_scaled_values(vec![5.0, 5.0], 1, 2, Scheme::Overlapping).unwrap();
        assert_eq!(u_stat_fast(&v, FastGini::R1).unwrap().value, 0.0);
        assert_eq!(u_stat_fast(&v, FastGini::R2).unwrap().value, 0.0);
    }

    #[test]
    fn second_order_needs_two_spacings() {
        let v = SpacingsVector::from_scaled_values(vec![2.0], 1, 2, Scheme::Disjoint).unwrap();
        let h = make_gini(2.0).unwrap();
        assert!(matches!(
            u_stat_naive(&v, &h),
            Err(Error::TooFewSpacings { len: 1 })
        ));
        assert!(matches!(
            u_stat_fast(&v, FastGini::R2),
            Err(Error::TooFewSpacings { .. })
        ));
        // First-order statistics are fine on a single spacing.
        let g = make_power_scalar(1.0).unwrap();
        assert_abs_diff_eq!(v_stat(&v, &g).unwrap().value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unscaled_input_rejected() {
        let s = Sample::from_observations(&[0.2, 0.5, 0.9]).unwrap();
        let v = overlapping_spacings(&s, 1).unwrap();
        let h = make_gini(2.0).unwrap();
        assert!(matches!(u_stat_naive(&v, &h), Err(Error::NotScaled)));
        assert!(matches!(
            u_stat_fast(&v, FastGini::R1),
            Err(Error::NotScaled)
        ));
        assert!(matches!(
            v_stat(&v, &make_power_scalar(2.0).unwrap()),
            Err(Error::NotScaled)
        ));
    }

    #[test]
    fn v_stat_frozen_values() {
        let v = scaled_example();
        let g = make_power_scalar(2.0).unwrap();
        assert_abs_diff_eq!(v_stat(&v, &g).unwrap().value, 1.2, epsilon = 1e-15);

        // Constant kernel g == 1 gives N/n: the first-order divisor is n.
        let one = ScalarKernel::custom("one", |_| 1.0);
        let s = Sample::from_observations(&[0.3, 0.6]).unwrap(); // n = 3
        let m1 = overlapping_spacings(&s, 1).unwrap().scale().unwrap();
        assert_abs_diff_eq!(v_stat(&m1, &one).unwrap().value, 1.0, epsilon = 1e-15);

        // g(x) = x with scaled values (2, 2) and n = 2: V = 4/2 = 2.
        let pair = SpacingsVector::from_scaled_values(vec![2.0, 2.0], 1, 2, Scheme::Overlapping).unwrap();
        let gx = make_power_scalar(1.0).unwrap();
        assert_abs_diff_eq!(v_stat(&pair, &gx).unwrap().value, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn v_stat_divisor_differs_from_spacing_count() {
        // Overlapping m=2 on n=4: N = 3 spacings but divisor 4.
        let s = Sample::from_observations(&[0.2, 0.5, 0.9]).unwrap();
        let v = overlapping_spacings(&s, 2).unwrap().scale().unwrap();
        let one = ScalarKernel::custom("one", |_| 1.0);
        assert_abs_diff_eq!(v_stat(&v, &one).unwrap().value, 3.0 / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn statistic_for_dispatch() {
        let v = scaled_example();
        let gini2 = statistic_for(&KernelSpec::Gini { r: 2.0 }, &v).unwrap();
        assert_abs_diff_eq!(gini2.value, 2.0 * 3.2 / 12.0, epsilon = 1e-14);
        let gw = statistic_for(&KernelSpec::Greenwood, &v).unwrap();
        assert_eq!(gw.kind, StatisticKind::FirstOrder);
        assert_eq!(gw.kernel_label, "greenwood");
        assert_abs_diff_eq!(gw.value, 1.2, epsilon = 1e-15);
        let sym = statistic_for(&KernelSpec::SymSq, &v).unwrap();
        assert_abs_diff_eq!(sym.value, 1.2, epsilon = 1e-15);
        assert_eq!(sym.kernel_label, "symsq");
    }
}
