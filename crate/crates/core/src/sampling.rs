//! Reproducible random inputs: uniform and beta samples, contiguous local
//! alternatives, and the stationary gamma-window process behind the
//! asymptotic moments.
//!
//! Determinism contract: every draw consumes exactly one generator word, so
//! a stream's content depends only on (master_seed, stream_id) and the draw
//! index — never on threading or on what other streams were used for.

use crate::error::{Error, Result};
use crate::special::inv_beta_reg;
use crate::spacings::Sample;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Addressable random stream: a master seed plus a stream id.
///
/// Streams with the same master seed but different ids are independent;
/// replication i of a simulation conventionally uses `substream(i)` of the
/// caller's spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// The stream offset by `offset` ids (wrapping).
    pub fn substream(&self, offset: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }

    /// Instantiate the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

impl fmt::Display for RngSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.stream_id)
    }
}

/// Uniform draw on the open interval (0, 1): 53 random bits centred in
/// their bucket, so 0 and 1 are unreachable. Consumes one generator word.
#[inline]
pub fn uniform_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard exponential draw; one generator word.
#[inline]
pub fn exponential(rng: &mut impl RngCore) -> f64 {
    -uniform_open(rng).ln()
}

/// `count` iid uniforms on (0, 1), sorted into a [`Sample`].
pub fn sample_uniform(count: usize, spec: RngSpec) -> Result<Sample> {
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = spec.rng();
    let mut values: Vec<f64> = (0..count).map(|_| uniform_open(&mut rng)).collect();
    values.sort_unstable_by(f64::total_cmp);
    Ok(Sample::from_sorted_unchecked(values))
}

/// `count` iid Beta(a, b) draws by quantile inversion of one uniform each.
///
/// Beta(1, 1) reproduces [`sample_uniform`] bit for bit on the same spec.
pub fn sample_beta(a: f64, b: f64, count: usize, spec: RngSpec) -> Result<Sample> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::NonpositiveShape { a, b });
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = spec.rng();
    let mut values: Vec<f64> = (0..count)
        .map(|_| inv_beta_reg(a, b, uniform_open(&mut rng)))
        .collect();
    values.sort_unstable_by(f64::total_cmp);
    Ok(Sample::from_sorted_unchecked(values))
}

// ---------------------------------------------------------------------------
// Local alternatives

type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ShapeForm {
    Sine,
    Bump,
    Custom { l: ShapeFn, l_prime: ShapeFn },
}

/// A perturbation shape L on [0, 1] with L(0) = L(1) = 0, used to build
/// contiguous alternatives F_n(x) = x + L(x) / n^(1/4).
#[derive(Clone)]
pub struct LocalShape {
    label: String,
    form: ShapeForm,
}

impl LocalShape {
    /// L(x) = sin(2 pi x) / (2 pi); integral of L'^2 is 1/2.
    pub fn sine() -> Self {
        Self {
            label: "sine".into(),
            form: ShapeForm::Sine,
        }
    }

    /// L(x) = x(1 - x); integral of L'^2 is 1/3.
    pub fn bump() -> Self {
        Self {
            label: "bump".into(),
            form: ShapeForm::Bump,
        }
    }

    /// A user-supplied shape with its derivative. Endpoint and monotonicity
    /// requirements are enforced when an alternative is built from it.
    pub fn custom(
        label: impl Into<String>,
        l: impl Fn(f64) -> f64 + Send + Sync + 'static,
        l_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            form: ShapeForm::Custom {
                l: Arc::new(l),
                l_prime: Arc::new(l_prime),
            },
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(Self::sine()),
            "bump" => Ok(Self::bump()),
            other => Err(Error::UnsupportedFamily {
                spec: format!("shape `{other}` (expected sine|bump)"),
            }),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn l(&self, x: f64) -> f64 {
        match &self.form {
            ShapeForm::Sine => (std::f64::consts::TAU * x).sin() / std::f64::consts::TAU,
            ShapeForm::Bump => x * (1.0 - x),
            ShapeForm::Custom { l, .. } => l(x),
        }
    }

    pub fn l_prime(&self, x: f64) -> f64 {
        match &self.form {
            ShapeForm::Sine => (std::f64::consts::TAU * x).cos(),
            ShapeForm::Bump => 1.0 - 2.0 * x,
            ShapeForm::Custom { l_prime, .. } => l_prime(x),
        }
    }
}

impl fmt::Debug for LocalShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalShape").field("label", &self.label).finish()
    }
}

/// Serializable tag for the built-in shapes, used where configurations must
/// round-trip through JSON (custom closures cannot).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sine,
    Bump,
}

impl ShapeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(ShapeKind::Sine),
            "bump" => Ok(ShapeKind::Bump),
            other => Err(Error::UnsupportedFamily {
                spec: format!("shape `{other}` (expected sine|bump)"),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Sine => "sine",
            ShapeKind::Bump => "bump",
        }
    }

    pub fn shape(&self) -> LocalShape {
        match self {
            ShapeKind::Sine => LocalShape::sine(),
            ShapeKind::Bump => LocalShape::bump(),
        }
    }
}

/// The distribution F_n(x) = x + L(x) / n^(1/4) on [0, 1].
#[derive(Clone, Debug)]
pub struct LocalAlternative {
    shape: LocalShape,
    n: usize,
    scale: f64,
}

const MONOTONE_GRID: usize = 4096;

impl LocalAlternative {
    /// Build the alternative at sample-size parameter n, verifying the
    /// density 1 + L'(x)/n^(1/4) stays positive on a fine grid and that L
    /// vanishes at both endpoints.
    pub fn new(shape: LocalShape, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let scale = (n as f64).powf(0.25);
        let fail = || Error::NonmonotoneAlternative {
            label: shape.label.clone(),
            n,
        };
        if shape.l(0.0).abs() > 1e-12 || shape.l(1.0).abs() > 1e-12 {
            return Err(fail());
        }
        for i in 0..=MONOTONE_GRID {
            let x = i as f64 / MONOTONE_GRID as f64;
            if !(1.0 + shape.l_prime(x) / scale > 0.0) {
                return Err(fail());
            }
        }
        Ok(Self { shape, n, scale })
    }

    pub fn shape(&self) -> &LocalShape {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> String {
        format!("local:{}(n={})", self.shape.label, self.n)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        x + self.shape.l(x) / self.scale
    }

    fn density(&self, x: f64) -> f64 {
        1.0 + self.shape.l_prime(x) / self.scale
    }

    /// Invert the CDF by safeguarded Newton to absolute tolerance 1e-12.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut x = p;
        for _ in 0..100 {
            let f = self.cdf(x) - p;
            if f > 0.0 {
                hi = x;
            } else if f < 0.0 {
                lo = x;
            } else {
                break;
            }
            let mut next = x - f / self.density(x);
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let done = (next - x).abs() < 1e-13 || hi - lo < 1e-13;
            x = next;
            if done {
                break;
            }
        }
        // F(0) = 0 and F(1) = 1, so interior probabilities map to interior
        // points; protect the open-interval contract against rounding.
        x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// `count` iid draws from a local alternative, one uniform word per draw.
///
/// With L == 0 this reproduces [`sample_uniform`] exactly: the quantile
/// solver starts at x = p, where the residual is already zero.
pub fn sample_local_alternative(
    alt: &LocalAlternative,
    count: usize,
    spec: RngSpec,
) -> Result<Sample> {
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = spec.rng();
    let mut values: Vec<f64> = (0..count)
        .map(|_| alt.quantile(uniform_open(&mut rng)))
        .collect();
    values.sort_unstable_by(f64::total_cmp);
    Ok(Sample::from_sorted_unchecked(values))
}

// ---------------------------------------------------------------------------
// Gamma windows

/// Overlapping m-step partial sums of a standard exponential stream.
///
/// Window j (0-based) sums exponentials j..j+m; consecutive windows share
/// m-1 terms, giving an (m-1)-dependent stationary sequence whose marginal
/// is Gamma(m, 1). This is the limiting model for scaled overlapping
/// m-spacings.
#[derive(Clone, Debug)]
pub struct GammaWindowSequence {
    windows: Vec<f64>,
    m: usize,
}

impl GammaWindowSequence {
    pub fn windows(&self) -> &[f64] {
        &self.windows
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Generate `length` gamma windows of order m from `length + m - 1`
/// exponential draws.
pub fn gamma_windows(m: usize, length: usize, spec: RngSpec) -> Result<GammaWindowSequence> {
    if m == 0 || length == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = spec.rng();
    let exps: Vec<f64> = (0..length + m - 1).map(|_| exponential(&mut rng)).collect();
    let windows = windows_from_exponentials(&exps, m);
    Ok(GammaWindowSequence { windows, m })
}

/// Windows from an existing exponential slice (shared-stream estimators).
pub(crate) fn windows_from_exponentials(exps: &[f64], m: usize) -> Vec<f64> {
    debug_assert!(exps.len() >= m);
    // Direct per-window sums: O(m * len) but free of the drift a running
    // add/subtract window would accumulate.
    (0..=exps.len() - m)
        .map(|j| exps[j..j + m].iter().sum())
        .collect()
}

// ---------------------------------------------------------------------------
