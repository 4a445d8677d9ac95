//! Limit theory: null moments of the second-order statistics, shifts under
//! contiguous alternatives, and efficacy comparisons.
//!
//! The scaled overlapping m-spacings behave asymptotically like the
//! stationary gamma-window process (see [`crate::sampling::gamma_windows`]),
//! so every constant here is a moment of that process:
//!
//! * theta  = E h(Z, Z') for independent Gamma(m,1) windows Z, Z';
//! * B      = cov(h(Z1, Z2), Z1) with Z1, Z2 adjacent disjoint windows;
//! * A      = sum over lags j of cov(h(W_m, W_4m), h(W_j, W_6m)), the
//!   windows drawn from one exponential stream of length 7m so that only
//!   the first arguments overlap;
//! * sigma2 = 4 (A - B^2), the variance of sqrt(n) (W - theta);
//! * mu_h   = (1/2) * cov_term * integral of L'^2, the mean shift under
//!   F_n(x) = x + L(x) n^(-1/4), where cov_term = 2 cov(h(Z1, Z2), q(Z1))
//!   with q(z) = (z - m - 1)^2.
//!
//! For |x-y|^2 everything is available in closed form; Monte Carlo
//! estimation over the same window constructions covers other kernels.

use crate::accum::{par_chunk_reduce, CompensatedSum};
use crate::error::{Error, Result};
use crate::kernels::SymmetricKernel;
use crate::sampling::{exponential, windows_from_exponentials, LocalShape, RngSpec};
use serde::Serialize;
use std::collections::BTreeMap;

/// Where a set of moment constants came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Analytic,
    MonteCarlo,
}

/// Standard errors attached to Monte Carlo moment estimates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentStdErrors {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub sigma2: f64,
}

/// Null moment constants of a second-order statistic.
#[derive(Clone, Debug, Serialize)]
pub struct KernelMoments {
    pub kernel: String,
    pub m: usize,
    pub theta: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub sigma2: f64,
    pub source: MomentSource,
    #[serde(rename = "std_errors", skip_serializing_if = "Option::is_none")]
    pub mc_std_errors: Option<MomentStdErrors>,
}

/// cov(h(Z_i, .), h(Z_j, .)) for |x-y|^2 when the order-m windows Z_i, Z_j
/// share exactly k exponentials: 2k^2 + 6k, independent of m.
pub fn overlap_cov_gini_sq(m: usize, k: usize) -> Result<f64> {
    if m == 0 || k > m {
        return Err(Error::OverlapOutOfRange { k, m });
    }
    let kf = k as f64;
    Ok(2.0 * kf * kf + 6.0 * kf)
}

/// Closed-form null moments of the |x-y|^2 statistic at order m.
///
/// A is assembled from the overlap covariances lag by lag; the resulting
/// variance collapses to sigma2 = 8 m (m+1)(2m+1) / 3.
pub fn moments_analytic_gini_sq(m: usize) -> KernelMoments {
    assert!(m >= 1, "spacing order must be positive");
    let mf = m as f64;
    let theta = 2.0 * mf;
    let b = 2.0 * mf;
    // Lags j = 1..=2m of the window at m; overlap is m - |j - m|.
    let mut a = CompensatedSum::new();
    for j in 1..=2 * m {
        let k = m - m.abs_diff(j);
        a.add(overlap_cov_gini_sq(m, k).expect("overlap within range"));
    }
    let a = a.total();
    KernelMoments {
        kernel: "gini:r=2".into(),
        m,
        theta,
        a,
        b,
        sigma2: 4.0 * (a - b * b),
        source: MomentSource::Analytic,
        mc_std_errors: None,
    }
}

/// sigma2 of the |x-y|^2 statistic in closed form (used as a cross-check
/// against the lag-sum assembly).
pub fn sigma2_gini_sq_closed_form(m: usize) -> f64 {
    let mf = m as f64;
    8.0 * mf * (mf + 1.0) * (2.0 * mf + 1.0) / 3.0
}

/// cov_term of the |x-y|^2 statistic: 4 m (m+1).
pub fn cov_term_gini_sq(m: usize) -> f64 {
    let mf = m as f64;
    4.0 * mf * (mf + 1.0)
}

// ---------------------------------------------------------------------------
// Monte Carlo moment engine

/// How to obtain moment constants.
#[derive(Clone, Copy, Debug)]
pub enum MomentMode {
    Analytic,
    MonteCarlo { reps: usize, spec: RngSpec },
}

/// Replication budget below which Monte Carlo moments are refused, and the
/// larger budget below which they are merely warned about.
const MC_HARD_MIN: usize = 100;
const MC_WARN_MIN: usize = 10_000;

/// Stream id offset separating the pair stream family from the lag-window
/// stream family inside one engine run.
const LAG_STREAM_BASE: u64 = 1 << 32;

/// Joint Monte Carlo estimates for several kernels evaluated on common
/// random numbers, with the full covariance matrix of the (A, B, cov_term)
/// estimates. Common streams make differences between kernels far more
/// precise than independent runs would.
pub(crate) struct JointMoments {
    pub reps: usize,
    pub theta: Vec<f64>,
    pub theta_se: Vec<f64>,
    /// Per kernel: (A, B, cov_term).
    pub abc: Vec<[f64; 3]>,
    /// Row-major (3K) x (3K) covariance of the stacked (A, B, cov_term)
    /// estimates, kernel blocks in order.
    pub cov: Vec<f64>,
}

impl JointMoments {
    pub fn cov_at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * 3 * self.theta.len() + j]
    }
}

/// Estimate theta, A, B and cov_term for each kernel from `reps`
/// replications of the window constructions, all kernels sharing streams.
pub(crate) fn joint_moments_mc(
    kernels: &[&SymmetricKernel],
    m: usize,
    reps: usize,
    spec: RngSpec,
) -> Result<JointMoments> {
    assert!(m >= 1, "spacing order must be positive");
    assert!(!kernels.is_empty());
    if reps < MC_HARD_MIN {
        return Err(Error::InsufficientReps {
            reps,
            min: MC_HARD_MIN,
        });
    }
    if reps < MC_WARN_MIN {
        log::warn!("moment estimation with only {reps} replications; expect coarse std errors");
    }
    debug_assert!((reps as u64) < LAG_STREAM_BASE);

    let k_count = kernels.len();
    let lag_count = 2 * m; // Y_1 .. Y_2m
    let mf = m as f64;

    // Per-replication quantities, in pass-1 layout:
    //   [z1, q] ++ per kernel [hv, x, y_1..y_2m]
    let per_kernel = 2 + lag_count;
    let dims1 = 2 + k_count * per_kernel;

    let gen_rep = |i: usize, exps: &mut Vec<f64>, windows: &mut Vec<f64>| -> (f64, f64) {
        // Pair stream: windows 1 and m+1 of a 2m-exponential stream are
        // adjacent, disjoint, hence independent Gamma(m,1).
        let mut pair_rng = spec.substream(i as u64).rng();
        let mut z1 = 0.0;
        let mut z2 = 0.0;
        for _ in 0..m {
            z1 += exponential(&mut pair_rng);
        }
        for _ in 0..m {
            z2 += exponential(&mut pair_rng);
        }
        // Lag stream: 7m exponentials -> windows with starts 1..=6m+1.
        let mut lag_rng = spec.substream(LAG_STREAM_BASE + i as u64).rng();
        exps.clear();
        exps.extend((0..7 * m).map(|_| exponential(&mut lag_rng)));
        windows.clear();
        windows.extend(windows_from_exponentials(exps, m));
        (z1, z2)
    };

    // window start j (1-based) lives at index j-1
    let w = |windows: &[f64], j: usize| windows[j - 1];

    // Pass 1: means.
    let sums1 = par_chunk_reduce(reps, dims1, |range, acc| {
        let mut exps = Vec::with_capacity(7 * m);
        let mut windows = Vec::with_capacity(6 * m + 1);
        for i in range {
            let (z1, z2) = gen_rep(i, &mut exps, &mut windows);
            acc[0].add(z1);
            let q = (z1 - mf - 1.0) * (z1 - mf - 1.0);
            acc[1].add(q);
            for (k, h) in kernels.iter().enumerate() {
                let base = 2 + k * per_kernel;
                acc[base].add(h.eval(z1, z2));
                acc[base + 1].add(h.eval(w(&windows, m), w(&windows, 4 * m)));
                for j in 1..=lag_count {
                    acc[base + 1 + j].add(h.eval(w(&windows, j), w(&windows, 6 * m)));
                }
            }
        }
    });
    let rf = reps as f64;
    let mean = |idx: usize| sums1[idx] / rf;
    let z1_bar = mean(0);
    let q_bar = mean(1);

    // Pass 2: influence first and second moments. Influence layout per
    // kernel: (a_inf, b_inf, c_inf); plus one (hv - theta)^2 slot per
    // kernel at the tail.
    let v3 = 3 * k_count;
    let dims2 = v3 + v3 * (v3 + 1) / 2 + k_count;
    let sums2 = par_chunk_reduce(reps, dims2, |range, acc| {
        let mut exps = Vec::with_capacity(7 * m);
        let mut windows = Vec::with_capacity(6 * m + 1);
        let mut infl = vec![0.0f64; v3];
        for i in range {
            let (z1, z2) = gen_rep(i, &mut exps, &mut windows);
            let q = (z1 - mf - 1.0) * (z1 - mf - 1.0);
            for (k, h) in kernels.iter().enumerate() {
                let base = 2 + k * per_kernel;
                let hv = h.eval(z1, z2);
                let theta_k = mean(base);
                let x = h.eval(w(&windows, m), w(&windows, 4 * m));
                let x_bar = mean(base + 1);
                let mut a_inf = 0.0;
                for j in 1..=lag_count {
                    let y = h.eval(w(&windows, j), w(&windows, 6 * m));
                    a_inf += (x - x_bar) * (y - mean(base + 1 + j));
                }
                infl[3 * k] = a_inf;
                infl[3 * k + 1] = (hv - theta_k) * (z1 - z1_bar);
                infl[3 * k + 2] = 2.0 * (hv - theta_k) * (q - q_bar);
                acc[v3 + v3 * (v3 + 1) / 2 + k].add((hv - theta_k) * (hv - theta_k));
            }
            let mut slot = v3;
            for (p, &ip) in infl.iter().enumerate() {
                acc[p].add(ip);
                for &iq in &infl[p..] {
                    acc[slot].add(ip * iq);
                    slot += 1;
                }
            }
        }
    });

    // Assemble estimates: covariances with divisor reps - 1, estimate
    // covariance = sample covariance of influences / reps.
    let est_scale = rf / (rf - 1.0);
    let mut abc = Vec::with_capacity(k_count);
    let mut theta = Vec::with_capacity(k_count);
    let mut theta_se = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let base = 2 + k * per_kernel;
        theta.push(mean(base));
        let hv_m2 = sums2[v3 + v3 * (v3 + 1) / 2 + k];
        theta_se.push((hv_m2 / (rf - 1.0) / rf).max(0.0).sqrt());
        abc.push([
            sums2[3 * k] / rf * est_scale,
            sums2[3 * k + 1] / rf * est_scale,
            sums2[3 * k + 2] / rf * est_scale,
        ]);
    }
    let mut cov = vec![0.0f64; v3 * v3];
    let mut slot = v3;
    for p in 0..v3 {
        for r in p..v3 {
            let m2 = sums2[slot];
            slot += 1;
            let sample_cov = (m2 - sums2[p] * sums2[r] / rf) / (rf - 1.0);
            let est_cov = sample_cov / rf * est_scale * est_scale;
            cov[p * v3 + r] = est_cov;
            cov[r * v3 + p] = est_cov;
        }
    }
    Ok(JointMoments {
        reps,
        theta,
        theta_se,
        abc,
        cov,
    })
}

/// Monte Carlo estimate of a kernel's null moment constants.
pub fn moments_mc(
    h: &SymmetricKernel,
    m: usize,
    reps: usize,
    spec: RngSpec,
) -> Result<KernelMoments> {
    let joint = joint_moments_mc(&[h], m, reps, spec)?;
    let [a, b, _c] = joint.abc[0];
    let (va, vb, cab) = (joint.cov_at(0, 0), joint.cov_at(1, 1), joint.cov_at(0, 1));
    // sigma2 = 4(A - B^2): gradient (4, -8B).
    let g = [4.0, -8.0 * b];
    let var_sigma2 = g[0] * g[0] * va + 2.0 * g[0] * g[1] * cab + g[1] * g[1] * vb;
    Ok(KernelMoments {
        kernel: h.label().to_string(),
        m,
        theta: joint.theta[0],
        a,
        b,
        sigma2: 4.0 * (a - b * b),
        source: MomentSource::MonteCarlo,
        mc_std_errors: Some(MomentStdErrors {
            theta: joint.theta_se[0],
            a: va.max(0.0).sqrt(),
            b: vb.max(0.0).sqrt(),
            sigma2: var_sigma2.max(0.0).sqrt(),
        }),
    })
}

/// Moments for a kernel under the given mode. Analytic mode requires the
/// |x-y|^2 kernel.
pub fn moments(h: &SymmetricKernel, m: usize, mode: MomentMode) -> Result<KernelMoments> {
    match mode {
        MomentMode::Analytic => {
            if !h.has_analytic_moments() {
                return Err(Error::AnalyticUnavailable {
                    kernel: h.label().to_string(),
                });
            }
            Ok(moments_analytic_gini_sq(m))
        }
        MomentMode::MonteCarlo { reps, spec } => moments_mc(h, m, reps, spec),
    }
}

// ---------------------------------------------------------------------------
// Quadrature

/// Integral of L'(x)^2 over [0, 1] by adaptive Simpson quadrature to
/// relative tolerance 1e-10.
pub fn integral_l_prime_sq(shape: &LocalShape) -> Result<f64> {
    let f = |x: f64| {
        let d = shape.l_prime(x);
        d * d
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-10)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), mid, fm)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    // Pre-split into fixed panels so a periodic integrand cannot alias the
    // coarse grid into a false early convergence, then adapt within each.
    const PANELS: usize = 32;
    let width = (b - a) / PANELS as f64;
    let mut rough = 0.0;
    for p in 0..PANELS {
        let lo = a + p as f64 * width;
        let (est, _, _) = simpson(f, lo, f(lo), lo + width, f(lo + width));
        rough += est;
    }
    if !rough.is_finite() {
        return Err(Error::QuadratureFailure);
    }
    let eps = rel_tol * rough.abs().max(1e-3) / PANELS as f64;
    let mut total = CompensatedSum::new();
    for p in 0..PANELS {
        let lo = a + p as f64 * width;
        let hi = lo + width;
        let (fa, fb) = (f(lo), f(hi));
        let (whole, mid, fm) = simpson(f, lo, fa, hi, fb);
        total.add(recurse(f, lo, fa, hi, fb, mid, fm, whole, eps, 48)?);
    }
    Ok(total.total())
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    mid: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    if depth == 0 {
        return Err(Error::QuadratureFailure);
    }
    let (left, lmid, flm) = simpson(f, a, fa, mid, fm);
    let (right, rmid, frm) = simpson(f, mid, fm, b, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureFailure);
    }
    if delta.abs() <= 15.0 * eps {
        // Richardson extrapolation knocks out the leading error term.
        return Ok(left + right + delta / 15.0);
    }
    let l = recurse(f, a, fa, mid, fm, lmid, flm, left, eps / 2.0, depth - 1)?;
    let r = recurse(f, mid, fm, b, fb, rmid, frm, right, eps / 2.0, depth - 1)?;
    Ok(l + r)
}

// ---------------------------------------------------------------------------
// Local shifts and efficacy

/// Mean shift of sqrt(n)(W - theta) under a contiguous alternative.
#[derive(Clone, Debug, Serialize)]
pub struct LocalShift {
    pub kernel: String,
    pub m: usize,
    pub shape: String,
    pub cov_term: f64,
    pub integral_lprime_sq: f64,
    pub mu_h: f64,
    pub source: MomentSource,
    /// True when the expansion behind mu_h is not established for this
    /// kernel (anything but |x-y|^2); the number is then an extrapolation.
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_term_std_error: Option<f64>,
}

/// Compute the local shift for a kernel and shape.
pub fn local_shift(
    h: &SymmetricKernel,
    m: usize,
    shape: &LocalShape,
    mode: MomentMode,
) -> Result<LocalShift> {
    let integral = integral_l_prime_sq(shape)?;
    let heuristic = !h.has_analytic_moments();
    match mode {
        MomentMode::Analytic => {
            if heuristic {
                return Err(Error::AnalyticUnavailable {
                    kernel: h.label().to_string(),
                });
            }
            let cov_term = cov_term_gini_sq(m);
            Ok(LocalShift {
                kernel: h.label().to_string(),
                m,
                shape: shape.label().to_string(),
                cov_term,
                integral_lprime_sq: integral,
                mu_h: 0.5 * cov_term * integral,
                source: MomentSource::Analytic,
                heuristic: false,
                cov_term_std_error: None,
            })
        }
        MomentMode::MonteCarlo { reps, spec } => {
            if heuristic {
                log::warn!(
                    "local shift for `{}` uses a smooth-kernel expansion heuristically",
                    h.label()
                );
            }
            let joint = joint_moments_mc(&[h], m, reps, spec)?;
            let cov_term = joint.abc[0][2];
            Ok(LocalShift {
                kernel: h.label().to_string(),
                m,
                shape: shape.label().to_string(),
                cov_term,
                integral_lprime_sq: integral,
                mu_h: 0.5 * cov_term * integral,
                source: MomentSource::MonteCarlo,
                heuristic,
                cov_term_std_error: Some(joint.cov_at(2, 2).max(0.0).sqrt()),
            })
        }
    }
}

/// Pitman-style efficacy e^2 = mu_h^2 / sigma2 of a kernel against a shape,
/// with asymptotic relative efficiencies versus other kernels.
#[derive(Clone, Debug, Serialize)]
pub struct EfficacyReport {
    pub kernel: String,
    pub m: usize,
    pub shape: String,
    pub e2: f64,
    pub mu_h: f64,
    pub sigma2: f64,
    pub source: MomentSource,
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e2_std_error: Option<f64>,
    /// Keyed by the other kernel's label.
    pub are_vs: BTreeMap<String, AreEntry>,
}

/// Relative efficiency of this kernel against another.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AreEntry {
    /// Squared efficacy ratio (e2_self / e2_other)^2 — the convention the
    /// m-spacings literature reports.
    pub are: f64,
    /// Plain efficacy-squared ratio e2_self / e2_other, for readers who
    /// expect the unsquared convention.
    pub e2_ratio: f64,
}

impl EfficacyReport {
    /// Record the relative efficiency against another report (same shape).
    pub fn add_comparison(&mut self, other: &EfficacyReport) -> Result<()> {
        if !(other.e2 > 0.0) {
            return Err(Error::DegenerateVariance { sigma2: other.e2 });
        }
        let ratio = self.e2 / other.e2;
        self.are_vs.insert(
            other.kernel.clone(),
            AreEntry {
                are: ratio * ratio,
                e2_ratio: ratio,
            },
        );
        Ok(())
    }
}

/// Efficacy of a kernel at order m against a shape.
pub fn efficacy(
    h: &SymmetricKernel,
    m: usize,
    shape: &LocalShape,
    mode: MomentMode,
) -> Result<EfficacyReport> {
    let integral = integral_l_prime_sq(shape)?;
    match mode {
        MomentMode::Analytic => {
            let shift = local_shift(h, m, shape, mode)?;
            let sigma2 = moments_analytic_gini_sq(m).sigma2;
            if !(sigma2 > 0.0) {
                return Err(Error::DegenerateVariance { sigma2 });
            }
            Ok(EfficacyReport {
                kernel: h.label().to_string(),
                m,
                shape: shape.label().to_string(),
                e2: shift.mu_h * shift.mu_h / sigma2,
                mu_h: shift.mu_h,
                sigma2,
                source: MomentSource::Analytic,
                heuristic: false,
                e2_std_error: None,
                are_vs: BTreeMap::new(),
            })
        }
        MomentMode::MonteCarlo { reps, spec } => {
            let cmp = efficacy_comparison_mc(&[h.clone()], m, shape, reps, spec)?;
            let mu = 0.5 * cmp.cov_term[0] * integral;
            Ok(EfficacyReport {
                kernel: h.label().to_string(),
                m,
                shape: shape.label().to_string(),
                e2: cmp.e2[0],
                mu_h: mu,
                sigma2: cmp.sigma2[0],
                source: MomentSource::MonteCarlo,
                heuristic: !h.has_analytic_moments(),
                e2_std_error: Some(cmp.e2_std_error[0]),
                are_vs: BTreeMap::new(),
            })
        }
    }
}

/// Closed-form efficacy of the |x-y|^2 statistic at order m for a shape
/// with the given integral of L'^2:
///
///   e^2 = 3 m (m+1) / (2 (2m+1)) * (integral)^2
///
/// Strictly increasing in m; the large-m limit is (3/4) integral^2 * m.
pub fn almp_efficacy(m: usize, integral_lprime_sq: f64) -> f64 {
    let mf = m as f64;
    3.0 * mf * (mf + 1.0) / (2.0 * (2.0 * mf + 1.0)) * integral_lprime_sq * integral_lprime_sq
}

/// Several kernels' efficacies estimated on common random numbers, with
/// delta-method standard errors for each pairwise difference. Shared
/// streams make the differences usable at replication counts where
/// independent runs would drown them in noise.
#[derive(Clone, Debug, Serialize)]
pub struct EfficacyComparison {
    pub m: usize,
    pub shape: String,
    pub integral_lprime_sq: f64,
    pub reps: usize,
    pub kernels: Vec<String>,
    pub e2: Vec<f64>,
    pub e2_std_error: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub cov_term: Vec<f64>,
    pub margins: Vec<MarginEstimate>,
}

/// A difference e2(first) - e2(second) with its standard error.
#[derive(Clone, Debug, Serialize)]
pub struct MarginEstimate {
    pub first: String,
    pub second: String,
    pub margin: f64,
    pub std_error: f64,
}

/// Estimate e^2 for every kernel on shared streams.
pub fn efficacy_comparison_mc(
    kernels: &[SymmetricKernel],
    m: usize,
    shape: &LocalShape,
    reps: usize,
    spec: RngSpec,
) -> Result<EfficacyComparison> {
    let integral = integral_l_prime_sq(shape)?;
    let refs: Vec<&SymmetricKernel> = kernels.iter().collect();
    let joint = joint_moments_mc(&refs, m, reps, spec)?;
    let k_count = kernels.len();
    let v3 = 3 * k_count;

    let mut e2 = Vec::with_capacity(k_count);
    let mut sigma2s = Vec::with_capacity(k_count);
    let mut cov_terms = Vec::with_capacity(k_count);
    // Gradient of e2_k over the stacked (A, B, cov_term) vector; zero
    // outside kernel k's block.
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let [a, b, c] = joint.abc[k];
        let sigma2 = 4.0 * (a - b * b);
        if !(sigma2 > 0.0) {
            return Err(Error::DegenerateVariance { sigma2 });
        }
        let mu = 0.5 * c * integral;
        e2.push(mu * mu / sigma2);
        sigma2s.push(sigma2);
        cov_terms.push(c);
        let mut g = vec![0.0; v3];
        let s4 = sigma2 * sigma2;
        g[3 * k] = -4.0 * mu * mu / s4; // d/dA
        g[3 * k + 1] = 8.0 * b * mu * mu / s4; // d/dB
        g[3 * k + 2] = mu * integral / sigma2; // d/d cov_term
        grads.push(g);
    }

    let quad_form = |u: &[f64], v: &[f64]| -> f64 {
        let mut total = 0.0;
        for p in 0..v3 {
            if u[p] == 0.0 {
                continue;
            }
            for r in 0..v3 {
                if v[r] != 0.0 {
                    total += u[p] * joint.cov[p * v3 + r] * v[r];
                }
            }
        }
        total
    };

    let e2_se: Vec<f64> = grads
        .iter()
        .map(|g| quad_form(g, g).max(0.0).sqrt())
        .collect();

    let mut margins = Vec::new();
    for i in 0..k_count {
        for j in (i + 1)..k_count {
            let var = quad_form(&grads[i], &grads[i]) + quad_form(&grads[j], &grads[j])
                - 2.0 * quad_form(&grads[i], &grads[j]);
            margins.push(MarginEstimate {
                first: kernels[i].label().to_string(),
                second: kernels[j].label().to_string(),
                margin: e2[i] - e2[j],
                std_error: var.max(0.0).sqrt(),
            });
        }
    }

    Ok(EfficacyComparison {
        m,
        shape: shape.label().to_string(),
        integral_lprime_sq: integral,
        reps: joint.reps,
        kernels: kernels.iter().map(|h| h.label().to_string()).collect(),
        e2,
        e2_std_error: e2_se,
        sigma2: sigma2s,
        cov_term: cov_terms,
        margins,
    })
}

// ---------------------------------------------------------------------------
