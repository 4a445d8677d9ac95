//! Samples on the open unit interval and their m-spacings.
//!
//! A sample of n-1 sorted observations in (0, 1), padded with the boundary
//! points 0 and 1, defines n simple spacings. The m-th order spacings are
//! gaps between order statistics m apart; they come in two flavours:
//! overlapping (every starting index) and disjoint (block starts only).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// How consecutive m-spacings share order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Overlapping,
    Disjoint,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Overlapping => "overlapping",
            Scheme::Disjoint => "disjoint",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlapping" => Ok(Scheme::Overlapping),
            "disjoint" => Ok(Scheme::Disjoint),
            other => Err(Error::UnsupportedFamily {
                spec: format!("scheme `{other}` (expected overlapping|disjoint)"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Samples

/// Sorted observations, each strictly inside (0, 1).
///
/// Spacings conventions index the sample-size parameter as n = count + 1:
/// the n-1 observations split the unit interval into n simple spacings.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Validate and sort raw observations.
    pub fn from_observations(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &v in raw {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::ValueOutOfUnitInterval { value: v });
            }
        }
        let mut values = raw.to_vec();
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Construct from values already known to be sorted and in (0, 1).
    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(values.iter().all(|&v| v > 0.0 && v < 1.0));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of observations (= n - 1).
    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Sample-size parameter n: one more than the observation count.
    pub fn n(&self) -> usize {
        self.values.len() + 1
    }
}

// ---------------------------------------------------------------------------
// Null families and the probability integral transform

/// Continuous null distributions supported for the probability integral
/// transform on raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum NullFamily {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, sd: f64 },
}

impl NullFamily {
    /// Parse a CLI-style spec: `uniform`, `uniform:<a>,<b>`, `exp:<rate>`,
    /// `normal:<mean>,<sd>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::UnsupportedFamily { spec: spec.into() };
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let family = match (name, args) {
            ("uniform", None) => NullFamily::Uniform { a: 0.0, b: 1.0 },
            ("uniform", Some(args)) => {
                let (a, b) = parse_pair(args).ok_or_else(bad)?;
                NullFamily::Uniform { a, b }
            }
            ("exp", Some(args)) | ("exponential", Some(args)) => {
                let rate = args.parse().ok().ok_or_else(bad)?;
                NullFamily::Exponential { rate }
            }
            ("normal", Some(args)) => {
                let (mean, sd) = parse_pair(args).ok_or_else(bad)?;
                NullFamily::Normal { mean, sd }
            }
            _ => return Err(bad()),
        };
        family.validate(spec)?;
        Ok(family)
    }

    fn validate(&self, spec: &str) -> Result<()> {
        let ok = match *self {
            NullFamily::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            NullFamily::Exponential { rate } => rate.is_finite() && rate > 0.0,
            NullFamily::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedFamily { spec: spec.into() })
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NullFamily::Uniform { a, b } => (x - a) / (b - a),
            NullFamily::Exponential { rate } => -(-rate * x).exp_m1(),
            NullFamily::Normal { mean, sd } => crate::special::norm_cdf((x - mean) / sd),
        }
    }
}

impl fmt::Display for NullFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NullFamily::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            NullFamily::Exponential { rate } => write!(f, "exp:{rate}"),
            NullFamily::Normal { mean, sd } => write!(f, "normal:{mean},{sd}"),
        }
    }
}

fn parse_pair(args: &str) -> Option<(f64, f64)> {
    let (x, y) = args.split_once(',')?;
    Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
}

/// Map raw observations through a null CDF onto (0, 1) and sort.
///
/// Values the CDF sends to 0 or 1 (outside or on the boundary of the null's
/// support) are rejected rather than clamped.
pub fn pit_transform(raw: &[f64], null: &NullFamily) -> Result<Sample> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut values = Vec::with_capacity(raw.len());
    for &x in raw {
        let u = null.cdf(x);
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ValueOutOfSupport { value: x });
        }
        values.push(u);
    }
    values.sort_unstable_by(f64::total_cmp);
    Ok(Sample::from_sorted_unchecked(values))
}

// ---------------------------------------------------------------------------
// Spacings

/// m-spacings of a sample, either raw (summing to 1 over a full sweep) or
/// scaled by n.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingsVector {
    values: Vec<f64>,
    m: usize,
    n: usize,
    scheme: Scheme,
    scaled: bool,
}

impl SpacingsVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sample-size parameter of the originating sample.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiply every spacing by n, the convention under which the statistics
    /// in this crate are defined. Errors if applied twice.
    pub fn scale(mut self) -> Result<Self> {
        if self.scaled {
            return Err(Error::AlreadyScaled);
        }
        let n = self.n as f64;
        for v in &mut self.values {
            *v *= n;
        }
        self.scaled = true;
        Ok(self)
    }

    /// Wrap externally produced scaled spacings so the statistic evaluators
    /// can run on them (Monte Carlo reuse, tests).
    pub fn from_scaled_values(values: Vec<f64>, m: usize, n: usize, scheme: Scheme) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if m == 0 || 2 * m > n {
            return Err(Error::OrderTooLarge { m, n });
        }
        Ok(Self {
            values,
            m,
            n,
            scheme,
            scaled: true,
        })
    }
}

fn check_order(m: usize, n: usize) -> Result<()> {
    if m == 0 || 2 * m > n {
        return Err(Error::OrderTooLarge { m, n });
    }
    Ok(())
}

/// All n - m + 1 overlapping m-spacings, boundaries included.
pub fn overlapping_spacings(sample: &Sample, m: usize) -> Result<SpacingsVector> {
    let n = sample.n();
    check_order(m, n)?;
    let at = boundary_indexer(sample);
    let values = (0..=n - m).map(|j| at(j + m) - at(j)).collect();
    Ok(SpacingsVector {
        values,
        m,
        n,
        scheme: Scheme::Overlapping,
        scaled: false,
    })
}

/// The floor(n/m) disjoint m-spacings; a partial block at the upper end is
/// discarded.
pub fn disjoint_spacings(sample: &Sample, m: usize) -> Result<SpacingsVector> {
    let n = sample.n();
    check_order(m, n)?;
    let at = boundary_indexer(sample);
    let blocks = n / m;
    let values = (1..=blocks).map(|j| at(j * m) - at((j - 1) * m)).collect();
    Ok(SpacingsVector {
        values,
        m,
        n,
        scheme: Scheme::Disjoint,
        scaled: false,
    })
}

/// Order statistic accessor with X_0 = 0 and X_n = 1.
fn boundary_indexer(sample: &Sample) -> impl Fn(usize) -> f64 + '_ {
    let n = sample.n();
    move |i: usize| {
        if i == 0 {
            0.0
        } else if i == n {
            1.0
        } else {
            sample.values()[i - 1]
        }
    }
}

/// Spacing order and scheme bundled for configuration plumbing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacingsConfig {
    pub m: usize,
    pub scheme: Scheme,
}

impl SpacingsConfig {
    pub fn new(m: usize, scheme: Scheme) -> Self {
        Self { m, scheme }
    }

    pub fn spacings(&self, sample: &Sample) -> Result<SpacingsVector> {
        match self.scheme {
            Scheme::Overlapping => overlapping_spacings(sample, self.m),
            Scheme::Disjoint => disjoint_spacings(sample, self.m),
        }
    }

    /// Spacings already multiplied by n — the form the statistics expect.
    pub fn scaled_spacings(&self, sample: &Sample) -> Result<SpacingsVector> {
        self.spacings(sample)?.scale()
    }
}

// ---------------------------------------------------------------------------
// Data files

/// Parse observation text: one decimal float per line, blank lines skipped,
/// `#` starts a comment (whole-line or trailing).
pub fn parse_observations(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let value: f64 = body.parse().map_err(|_| Error::DataParse {
            line: idx + 1,
            content: body.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Read an observation file (see [`parse_observations`] for the format).
pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    parse_observations(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
