//! Goodness-of-fit tests for continuous distributions built from
//! first- and second-order statistics of m-spacings.
//!
//! The pipeline: observations are mapped to (0, 1) by the null CDF, their
//! overlapping or disjoint m-spacings are scaled by the sample-size
//! parameter n, and a kernel — |x-y|^r over pairs, or g(x) over singles —
//! is averaged across them. Calibration is either asymptotic (the
//! statistics are asymptotically normal with moments computable from a
//! stationary gamma-window process) or Monte Carlo under the uniform null.
//!
//! Modules mirror the pipeline: [`spacings`] -> [`kernels`] ->
//! [`statistics`] -> [`inference`], with [`sampling`] providing
//! reproducible random inputs, [`asymptotics`] the limit theory, and
//! [`powerlab`] a power-simulation harness.

pub mod accum;
pub mod asymptotics;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod powerlab;
pub mod sampling;
pub mod special;
pub mod spacings;
pub mod statistics;

pub use asymptotics::{
    almp_efficacy, efficacy, local_shift, moments, EfficacyReport, KernelMoments, LocalShift,
    MomentMode, MomentSource,
};
pub use error::{Error, Result};
pub use inference::{asymptotic_test, mc_critical, mc_test, CriticalTable, Tail, TestResult};
pub use kernels::{make_gini, make_power_scalar, symmetrize, KernelSpec, ScalarKernel, SymmetricKernel};
pub use powerlab::{
    estimate_power, reproduce_paper_tables, run_power_study, Alternative, PowerCell, PowerRow,
    PowerStudy, PowerStudyConfig,
};
pub use sampling::{LocalAlternative, LocalShape, RngSpec, ShapeKind};
pub use spacings::{
    disjoint_spacings, overlapping_spacings, pit_transform, NullFamily, Sample, Scheme,
    SpacingsConfig, SpacingsVector,
};
pub use statistics::{
    statistic_for, u_stat_fast, u_stat_naive, v_stat, FastGini, StatisticKind, StatisticValue,
};
