//! Power simulation harness: size and power of the spacing statistics
//! against fixed and contiguous alternatives, including the preset grid
//! that reproduces the published m-spacings power tables.

use crate::accum::CHUNK;
use crate::error::{Error, Result};
use crate::inference::{mc_critical, CriticalTable, Tail};
use crate::kernels::KernelSpec;
use crate::sampling::{
    sample_beta, sample_local_alternative, sample_uniform, LocalAlternative, RngSpec, ShapeKind,
};
use crate::spacings::{Sample, Scheme, SpacingsConfig};
use crate::statistics::statistic_for;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Data-generating process for one table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Alternative {
    Uniform,
    Beta { a: f64, b: f64 },
    Local { shape: ShapeKind },
}

impl Alternative {
    /// Parse `uniform`, `beta:<a>,<b>` or `local:<sine|bump>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::UnsupportedFamily {
            spec: format!("alternative `{s}` (expected uniform, beta:<a>,<b> or local:<shape>)"),
        };
        if s == "uniform" {
            return Ok(Alternative::Uniform);
        }
        if let Some(args) = s.strip_prefix("beta:") {
            let (a, b) = args
                .split_once(',')
                .and_then(|(x, y)| Some((x.trim().parse().ok()?, y.trim().parse().ok()?)))
                .ok_or_else(bad)?;
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Error::NonpositiveShape { a, b });
            }
            return Ok(Alternative::Beta { a, b });
        }
        if let Some(shape) = s.strip_prefix("local:") {
            return Ok(Alternative::Local {
                shape: ShapeKind::parse(shape)?,
            });
        }
        Err(bad())
    }

    /// Family name without parameters (comma-free, used as a CSV field).
    pub fn family(&self) -> String {
        match self {
            Alternative::Uniform => "uniform".into(),
            Alternative::Beta { .. } => "beta".into(),
            Alternative::Local { shape } => format!("local:{}", shape.name()),
        }
    }

    /// Human-readable label with parameters.
    pub fn label(&self) -> String {
        match self {
            Alternative::Uniform => "uniform".into(),
            Alternative::Beta { a, b } => format!("beta({a},{b})"),
            Alternative::Local { shape } => format!("local:{}", shape.name()),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Alternative::Beta { a, b } = *self {
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Error::NonpositiveShape { a, b });
            }
        }
        Ok(())
    }

    /// Draw one sample of `count` observations; `n` parameterizes the
    /// contiguous alternatives.
    fn sample(&self, count: usize, n: usize, spec: RngSpec) -> Result<Sample> {
        match self {
            Alternative::Uniform => sample_uniform(count, spec),
            Alternative::Beta { a, b } => sample_beta(*a, *b, count, spec),
            Alternative::Local { shape } => {
                let alt = LocalAlternative::new(shape.shape(), n)?;
                sample_local_alternative(&alt, count, spec)
            }
        }
    }
}

/// Full factorial power study description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerStudyConfig {
    /// Sample-size parameter: each replication draws n - 1 observations.
    pub n: usize,
    pub alpha: f64,
    /// Replications per power cell.
    pub reps: usize,
    /// Replications behind each critical table.
    pub critical_reps: usize,
    pub alternatives: Vec<Alternative>,
    pub m_values: Vec<usize>,
    /// Exponents of the |x-y|^r statistics.
    pub r_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub tail: Tail,
    pub seed: RngSpec,
}

/// Stream-id blocks inside a study's master seed. Alternative draws for a
/// cell live at ALT_BASE + cell_index * REP_STRIDE, where cell_index runs
/// over (alternative, m, r) combinations; critical-table draws live at
/// TBL_BASE + (m, r)-index * REP_STRIDE. The scheme is deliberately absent
/// from both keys: the two schemes of a cell reuse the same draws, which
/// keeps the m = 1 rows of the two schemes exactly equal. All other cells
/// occupy disjoint stream blocks and are statistically independent.
const REP_STRIDE: u64 = 1 << 28;
const TBL_BASE: u64 = 1 << 44;
const ALT_BASE: u64 = 1 << 50;

impl PowerStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::BadProbability { p: self.alpha });
        }
        if self.reps == 0 || (self.reps as u64) >= REP_STRIDE {
            return Err(Error::InsufficientReps {
                reps: self.reps,
                min: 1,
            });
        }
        if (self.critical_reps as u64) >= REP_STRIDE {
            return Err(Error::InsufficientReps {
                reps: self.critical_reps,
                min: 1000,
            });
        }
        if self.alternatives.is_empty()
            || self.m_values.is_empty()
            || self.r_values.is_empty()
            || self.schemes.is_empty()
        {
            return Err(Error::EmptyInput);
        }
        for alt in &self.alternatives {
            alt.validate()?;
        }
        for &m in &self.m_values {
            if m == 0 || 2 * m > self.n {
                return Err(Error::OrderTooLarge { m, n: self.n });
            }
        }
        for &r in &self.r_values {
            if !(r > 0.0) {
                return Err(Error::NonpositiveExponent { exponent: r });
            }
        }
        Ok(())
    }

    /// The preset grid of the published tables: n = 50, upper-tail testing
    /// at the 5% level, the three beta alternatives, m in {1, 2, 4, 5, 10},
    /// r in {1, 1.5, 2}, both schemes.
    pub fn paper_preset(reps: usize, critical_reps: usize, seed: RngSpec) -> Self {
        Self {
            n: 50,
            alpha: 0.05,
            reps,
            critical_reps,
            alternatives: vec![
                Alternative::Beta { a: 0.5, b: 0.5 },
                Alternative::Beta { a: 3.0, b: 3.0 },
                Alternative::Beta { a: 1.0, b: 3.0 },
            ],
            m_values: vec![1, 2, 4, 5, 10],
            r_values: vec![1.0, 1.5, 2.0],
            schemes: vec![Scheme::Disjoint, Scheme::Overlapping],
            tail: Tail::Upper,
            seed,
        }
    }
}

/// One cell of a study grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerCell {
    pub alternative: Alternative,
    pub m: usize,
    pub scheme: Scheme,
    pub r: f64,
}

/// Estimated rejection rate for one cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerRow {
    pub alternative: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub scheme: Scheme,
    pub r: f64,
    pub power: f64,
    /// Binomial standard error sqrt(p (1-p) / reps).
    pub mc_std_error: f64,
    pub reps: usize,
    /// Number of spacings entering each statistic.
    pub spacing_count: usize,
    /// Set when fewer than 10 spacings feed the statistic; the normal and
    /// even the Monte Carlo calibration get coarse there.
    pub small_n: bool,
}

/// All rows for one alternative.
#[derive(Clone, Debug, Serialize)]
pub struct PowerTable {
    pub alternative: Alternative,
    pub label: String,
    pub rows: Vec<PowerRow>,
}

/// Calibration conventions echoed into every study output.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    /// Observations drawn per replication (one less than n).
    pub observations_per_sample: usize,
    /// The spacings sample-size parameter.
    pub internal_n: usize,
    pub tail: Tail,
    pub critical_method: &'static str,
    pub quantile_type: &'static str,
    pub p_value_rule: &'static str,
    pub stream_layout: &'static str,
}

/// A full study: config echo, conventions, one table per alternative.
#[derive(Clone, Debug, Serialize)]
pub struct PowerStudy {
    pub config: PowerStudyConfig,
    pub conventions: Conventions,
    pub tables: Vec<PowerTable>,
}

fn conventions_for(cfg: &PowerStudyConfig) -> Conventions {
    Conventions {
        observations_per_sample: cfg.n - 1,
        internal_n: cfg.n,
        tail: cfg.tail,
        critical_method: "monte_carlo",
        quantile_type: "type7",
        p_value_rule: "(1 + count_as_extreme) / (reps + 1)",
        stream_layout: "alternative draws keyed by (alternative, m, r), critical tables keyed \
                        by (m, r); both shared across the two schemes only",
    }
}

/// Count of null statistics at least / at most as extreme, turned into the
/// same rejection rule [`crate::inference::mc_test`] applies.
fn rejects(table_samples: &[f64], value: f64, tail: Tail, alpha: f64) -> bool {
    let reps = table_samples.len();
    let denom = (reps + 1) as f64;
    let count_lt = table_samples.partition_point(|&x| x < value);
    let count_le = table_samples.partition_point(|&x| x <= value);
    let p_upper = (1 + reps - count_lt) as f64 / denom;
    let p_lower = (1 + count_le) as f64 / denom;
    let p = match tail {
        Tail::Upper => p_upper,
        Tail::Lower => p_lower,
        Tail::TwoSided => (2.0 * p_upper.min(p_lower)).min(1.0),
    };
    p < alpha
}

/// Critical tables for every (m, scheme, r) of a study, indexed
/// [m_idx][scheme_idx][r_idx]. Tables of one m share null samples.
fn table_stream(cfg: &PowerStudyConfig, m_idx: usize, r_idx: usize) -> RngSpec {
    let key = (m_idx * cfg.r_values.len() + r_idx) as u64;
    cfg.seed.substream(TBL_BASE + key * REP_STRIDE)
}

fn cell_stream(cfg: &PowerStudyConfig, alt_idx: usize, m_idx: usize, r_idx: usize) -> RngSpec {
    let key = ((alt_idx * cfg.m_values.len() + m_idx) * cfg.r_values.len() + r_idx) as u64;
    cfg.seed.substream(ALT_BASE + key * REP_STRIDE)
}

fn build_tables(cfg: &PowerStudyConfig) -> Result<Vec<Vec<Vec<CriticalTable>>>> {
    let mut per_m = Vec::with_capacity(cfg.m_values.len());
    for (m_idx, &m) in cfg.m_values.iter().enumerate() {
        let mut per_scheme = Vec::with_capacity(cfg.schemes.len());
        for &scheme in &cfg.schemes {
            let mut per_r = Vec::with_capacity(cfg.r_values.len());
            for (r_idx, &r) in cfg.r_values.iter().enumerate() {
                per_r.push(mc_critical(
                    cfg.n,
                    m,
                    scheme,
                    &KernelSpec::Gini { r },
                    &[cfg.alpha, 1.0 - cfg.alpha],
                    cfg.critical_reps,
                    table_stream(cfg, m_idx, r_idx),
                )?);
            }
            per_scheme.push(per_r);
        }
        per_m.push(per_scheme);
    }
    Ok(per_m)
}

fn draw_cell_samples(cfg: &PowerStudyConfig, alt: &Alternative, base: RngSpec) -> Result<Vec<Sample>> {
    // Alternatives validate their parameters once up front so the parallel
    // loop cannot fail.
    alt.validate()?;
    if let Alternative::Local { shape } = alt {
        LocalAlternative::new(shape.shape(), cfg.n)?;
    }
    let n = cfg.n;
    let samples: Vec<Sample> = (0..cfg.reps)
        .into_par_iter()
        .with_min_len(CHUNK / 64)
        .map(|i| {
            alt.sample(n - 1, n, base.substream(i as u64))
                .expect("alternative validated")
        })
        .collect();
    Ok(samples)
}

fn power_of_cell(
    cfg: &PowerStudyConfig,
    samples: &[Sample],
    table: &CriticalTable,
    m: usize,
    scheme: Scheme,
    r: f64,
) -> (f64, usize) {
    let spacings_cfg = SpacingsConfig::new(m, scheme);
    let spec = KernelSpec::Gini { r };
    let reject_count: usize = samples
        .par_iter()
        .with_min_len(CHUNK / 16)
        .map(|s| {
            let v = spacings_cfg.scaled_spacings(s).expect("validated grid");
            let stat = statistic_for(&spec, &v).expect("validated grid");
            usize::from(rejects(&table.samples, stat.value, cfg.tail, cfg.alpha))
        })
        .sum();
    let spacing_count = match scheme {
        Scheme::Overlapping => cfg.n - m + 1,
        Scheme::Disjoint => cfg.n / m,
    };
    (reject_count as f64 / cfg.reps as f64, spacing_count)
}

fn make_row(
    cfg: &PowerStudyConfig,
    alt: &Alternative,
    m: usize,
    scheme: Scheme,
    r: f64,
    power: f64,
    spacing_count: usize,
) -> PowerRow {
    let (a, b) = match alt {
        Alternative::Beta { a, b } => (Some(*a), Some(*b)),
        _ => (None, None),
    };
    PowerRow {
        alternative: alt.family(),
        a,
        b,
        n: cfg.n,
        m,
        scheme,
        r,
        power,
        mc_std_error: (power * (1.0 - power) / cfg.reps as f64).sqrt(),
        reps: cfg.reps,
        spacing_count,
        small_n: spacing_count < 10,
    }
}

fn study_rows_for_alternative(
    cfg: &PowerStudyConfig,
    tables: &[Vec<Vec<CriticalTable>>],
    alt_idx: usize,
    alt: &Alternative,
) -> Result<Vec<PowerRow>> {
    let mut rows = Vec::new();
    for (m_idx, &m) in cfg.m_values.iter().enumerate() {
        // Rows are emitted scheme-major, but both schemes of a given
        // (m, r) cell score the same draws.
        let mut per_scheme: Vec<Vec<PowerRow>> = vec![Vec::new(); cfg.schemes.len()];
        for (r_idx, &r) in cfg.r_values.iter().enumerate() {
            let samples = draw_cell_samples(cfg, alt, cell_stream(cfg, alt_idx, m_idx, r_idx))?;
            for (s_idx, &scheme) in cfg.schemes.iter().enumerate() {
                let table = &tables[m_idx][s_idx][r_idx];
                let (power, spacing_count) = power_of_cell(cfg, &samples, table, m, scheme, r);
                per_scheme[s_idx].push(make_row(cfg, alt, m, scheme, r, power, spacing_count));
            }
        }
        for scheme_rows in per_scheme {
            rows.extend(scheme_rows);
        }
    }
    Ok(rows)
}

/// Run a full power study.
pub fn run_power_study(cfg: &PowerStudyConfig) -> Result<PowerStudy> {
    cfg.validate()?;
    let tables = build_tables(cfg)?;
    let mut out_tables = Vec::with_capacity(cfg.alternatives.len());
    for (alt_idx, alt) in cfg.alternatives.iter().enumerate() {
        let rows = study_rows_for_alternative(cfg, &tables, alt_idx, alt)?;
        out_tables.push(PowerTable {
            alternative: *alt,
            label: alt.label(),
            rows,
        });
    }
    Ok(PowerStudy {
        config: cfg.clone(),
        conventions: conventions_for(cfg),
        tables: out_tables,
    })
}

/// Estimate a single cell of a study grid; the cell must belong to the
/// config's grid, and the estimate equals the corresponding full-study row
/// (same streams).
pub fn estimate_power(cfg: &PowerStudyConfig, cell: &PowerCell) -> Result<PowerRow> {
    cfg.validate()?;
    let alt_idx = cfg
        .alternatives
        .iter()
        .position(|a| a == &cell.alternative)
        .ok_or_else(|| Error::TableMismatch {
            detail: format!("alternative {} not in the study grid", cell.alternative.label()),
        })?;
    let m_idx = cfg
        .m_values
        .iter()
        .position(|&m| m == cell.m)
        .ok_or_else(|| Error::TableMismatch {
            detail: format!("m={} not in the study grid", cell.m),
        })?;
    let r_idx = cfg
        .r_values
        .iter()
        .position(|&r| r == cell.r)
        .ok_or_else(|| Error::TableMismatch {
            detail: format!("r={} not in the study grid", cell.r),
        })?;
    if !cfg.schemes.contains(&cell.scheme) {
        return Err(Error::TableMismatch {
            detail: format!("scheme {} not in the study grid", cell.scheme),
        });
    }

    let table = mc_critical(
        cfg.n,
        cell.m,
        cell.scheme,
        &KernelSpec::Gini { r: cell.r },
        &[cfg.alpha, 1.0 - cfg.alpha],
        cfg.critical_reps,
        table_stream(cfg, m_idx, r_idx),
    )?;
    let samples =
        draw_cell_samples(cfg, &cell.alternative, cell_stream(cfg, alt_idx, m_idx, r_idx))?;
    let (power, spacing_count) =
        power_of_cell(cfg, &samples, &table, cell.m, cell.scheme, cell.r);
    Ok(make_row(
        cfg,
        &cell.alternative,
        cell.m,
        cell.scheme,
        cell.r,
        power,
        spacing_count,
    ))
}

/// Run the preset reproducing the published power tables.
pub fn reproduce_paper_tables(
    reps: usize,
    critical_reps: usize,
    seed: RngSpec,
) -> Result<PowerStudy> {
    run_power_study(&PowerStudyConfig::paper_preset(reps, critical_reps, seed))
}

/// Header of the study CSV format. Alternative parameters get their own
/// columns so no field ever contains a comma.
pub fn csv_header() -> &'static str {
    "alternative,a,b,n,m,scheme,r,power,std_error,tail,critical_method,seed"
}

/// One CSV line for a row of `study` (no trailing newline).
pub fn row_csv_line(study: &PowerStudy, row: &PowerRow) -> String {
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        row.alternative,
        fmt_opt(row.a),
        fmt_opt(row.b),
        row.n,
        row.m,
        row.scheme,
        row.r,
        row.power,
        row.mc_std_error,
        study.conventions.tail,
        study.conventions.critical_method,
        study.config.seed,
    )
}

/// Render a whole study as CSV.
pub fn study_to_csv(study: &PowerStudy) -> String {
    let mut out = String::from(csv_header());
    out.push('\n');
    for table in &study.tables {
        for row in &table.rows {
            out.push_str(&row_csv_line(study, row));
            out.push('\n');
        }
    }
    out
}

// ---------------------------------------------------------------------------
