//! Thin wrappers around special functions, plus an inverse regularized
//! incomplete beta built for the sampling hot loop.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta;

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

/// Inverse of the regularized incomplete beta function: the Beta(a, b)
/// quantile at probability `p`.
///
/// Newton iteration on I_x(a,b) - p with a bisection safeguard: every step
/// stays inside the current sign-change bracket, so convergence is
/// unconditional. Accuracy is limited only by `beta_reg` itself (~1e-15
/// relative).
pub fn inv_beta_reg(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    debug_assert!((0.0..=1.0).contains(&p));
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    // Beta(1,1) is the uniform; return the probability untouched so uniform
    // and beta sampling agree bit-for-bit on shared random streams.
    if a == 1.0 && b == 1.0 {
        return p;
    }
    let ln_beta = beta::ln_beta(a, b);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut x = a / (a + b);
    for _ in 0..200 {
        let f = beta_reg(a, b, x) - p;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        // Newton step using the beta density; falls back to bisection when
        // the step leaves the bracket (density underflow near 0/1 included).
        let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta;
        let step = f * (-ln_pdf).exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs() || hi - lo <= f64::EPSILON * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    // Quantiles of continuous Beta(a,b) for p in (0,1) are interior points;
    // keep float rounding from producing the endpoints.
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

// ---------------------------------------------------------------------------
