//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input sequence is empty")]
    EmptyInput,

    #[error("value {value} lies outside the open unit interval; apply a probability integral transform first")]
    ValueOutOfUnitInterval { value: f64 },

    #[error("unsupported null family spec `{spec}`; expected uniform[:<a>,<b>], exp:<rate> or normal:<mean>,<sd>")]
    UnsupportedFamily { spec: String },

    #[error("value {value} maps to a null CDF value outside (0,1)")]
    ValueOutOfSupport { value: f64 },

    #[error("spacing order m={m} violates 1 <= m <= n/2 for n={n}")]
    OrderTooLarge { m: usize, n: usize },

    #[error("spacings vector is already scaled")]
    AlreadyScaled,

    #[error("operation requires a scaled spacings vector")]
    NotScaled,

    #[error("exponent {exponent} must be positive")]
    NonpositiveExponent { exponent: f64 },

    #[error("need at least 2 spacings for a second-order statistic, got {len}")]
    TooFewSpacings { len: usize },

    #[error("alternative `{label}` is not strictly increasing for n={n}")]
    NonmonotoneAlternative { label: String, n: usize },

    #[error("beta shape parameters must be positive, got a={a}, b={b}")]
    NonpositiveShape { a: f64, b: f64 },

    #[error("{reps} replications below the minimum of {min}")]
    InsufficientReps { reps: usize, min: usize },

    #[error("window overlap k={k} must lie in 0..=m for m={m}")]
    OverlapOutOfRange { k: usize, m: usize },

    #[error("no analytic formula for kernel `{kernel}`; use Monte Carlo mode")]
    AnalyticUnavailable { kernel: String },

    #[error("quadrature failed to reach the requested tolerance")]
    QuadratureFailure,

    #[error("asymptotic variance {sigma2} is not positive")]
    DegenerateVariance { sigma2: f64 },

    #[error("critical table does not match the statistic: {detail}")]
    TableMismatch { detail: String },

    #[error("kernel mismatch: expected `{expected}`, got `{found}`")]
    KernelMismatch { expected: String, found: String },

    #[error("statistic kind mismatch: expected {expected}, got {found}")]
    StatisticKindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("probability {p} outside the valid range")]
    BadProbability { p: f64 },

    #[error("line {line}: cannot parse `{content}` as a decimal float")]
    DataParse { line: usize, content: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
