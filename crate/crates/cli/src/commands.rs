//! The six subcommands: test, critical, moments, efficacy, power, tables.
//!
//! Every command resolves its effective configuration from flags first and
//! the optional config file second, echoes that configuration into its JSON
//! output, and embeds the seed whenever randomness was involved.

use crate::config::{CliResult, ConfigMap};
use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};
use spacings_gof::asymptotics::{moments, MomentMode};
use spacings_gof::inference::{asymptotic_test, mc_critical, mc_test, TestResult};
use spacings_gof::powerlab::{csv_header, row_csv_line};
use spacings_gof::sampling::ShapeKind;
use spacings_gof::spacings::read_observations;
use spacings_gof::{
    make_gini, pit_transform, run_power_study, statistic_for, Alternative, KernelSpec, NullFamily,
    PowerStudy, PowerStudyConfig, RngSpec, Sample, Scheme, SpacingsConfig, SymmetricKernel, Tail,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        // Quiet exit when the reader went away (e.g. piped into `head`).
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        return Err(e.into());
    }
    Ok(())
}

fn parse_with<T: FromStr>(s: &str, what: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| format!("invalid {what} `{s}`: {e}").into())
}

/// Pair kernel behind a kernel spec, for moment and efficacy analysis.
fn pair_kernel(spec: &KernelSpec) -> CliResult<SymmetricKernel> {
    match spec {
        KernelSpec::Gini { r } => Ok(make_gini(*r)?),
        KernelSpec::SymSq => Ok(SymmetricKernel::custom("symsq", |x, y| {
            0.5 * (x * x + y * y)
        })),
        KernelSpec::Greenwood => Err(
            "kernel `greenwood` is first-order; moment and efficacy analysis needs a pair kernel \
             such as gini:r=2"
                .into(),
        ),
    }
}

// ---------------------------------------------------------------------------
// test

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Data file: one observation per line, `#` starts a comment
    pub input: Option<PathBuf>,
    /// Spacing order
    #[arg(long)]
    pub m: Option<usize>,
    /// overlapping | disjoint
    #[arg(long)]
    pub scheme: Option<String>,
    /// gini:r=<r> | greenwood | symsq
    #[arg(long)]
    pub kernel: Option<String>,
    /// mc | asymptotic
    #[arg(long)]
    pub method: Option<String>,
    /// upper | lower | two-sided
    #[arg(long)]
    pub tail: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Null family to transform by: uniform[:a,b] | exp:<rate> | normal:<mean>,<sd>
    #[arg(long)]
    pub null: Option<String>,
    /// Master seed for Monte Carlo calibration
    #[arg(long)]
    pub seed: Option<u64>,
    /// Critical-table replications for the mc method
    #[arg(long)]
    pub reps: Option<usize>,
    /// Exit with status 2 when the null is rejected
    #[arg(long)]
    pub exit_on_reject: bool,
}

#[derive(Serialize)]
struct TestOutput {
    #[serde(flatten)]
    result: TestResult,
    input: Value,
    effective_config: Value,
}

pub fn cmd_test(args: TestArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let input: PathBuf = args
        .input
        .or(cfg.take::<PathBuf>("input")?)
        .ok_or("missing input data file")?;
    let m = args.m.or(cfg.take("m")?).unwrap_or(1);
    let scheme: Scheme = args
        .scheme
        .or(cfg.take("scheme")?)
        .map(|s| parse_with(&s, "scheme"))
        .transpose()?
        .unwrap_or(Scheme::Overlapping);
    let kernel_spec = args
        .kernel
        .or(cfg.take("kernel")?)
        .unwrap_or_else(|| "gini:r=2".into());
    let kernel: KernelSpec = parse_with(&kernel_spec, "kernel")?;
    let method = args
        .method
        .or(cfg.take("method")?)
        .unwrap_or_else(|| "mc".into());
    let tail: Tail = args
        .tail
        .or(cfg.take("tail")?)
        .map(|s| parse_with(&s, "tail"))
        .transpose()?
        .unwrap_or(Tail::TwoSided);
    let alpha = args.alpha.or(cfg.take("alpha")?).unwrap_or(0.05);
    let null: Option<NullFamily> = args
        .null
        .or(cfg.take("null")?)
        .map(|s| NullFamily::parse(&s))
        .transpose()?;
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let reps = args.reps.or(cfg.take("reps")?).unwrap_or(10_000);
    let exit_on_reject =
        args.exit_on_reject || cfg.take("exit-on-reject")?.unwrap_or(false);
    cfg.finish()?;

    let raw = read_observations(&input)
        .map_err(|e| format!("cannot read `{}`: {e}", input.display()))?;
    let sample = match &null {
        Some(family) => pit_transform(&raw, family)?,
        None => Sample::from_observations(&raw)?,
    };
    let spacings = SpacingsConfig::new(m, scheme).scaled_spacings(&sample)?;
    let statistic = statistic_for(&kernel, &spacings)?;

    let result = match method.as_str() {
        "asymptotic" => {
            let h = pair_kernel(&kernel)?;
            let km = moments(&h, m, MomentMode::Analytic)?;
            asymptotic_test(&statistic, &km, tail, alpha)?
        }
        "mc" => {
            let mut probs = vec![alpha / 2.0, alpha, 1.0 - alpha, 1.0 - alpha / 2.0];
            probs.sort_unstable_by(f64::total_cmp);
            probs.dedup();
            let table = mc_critical(
                sample.n(),
                m,
                scheme,
                &kernel,
                &probs,
                reps,
                RngSpec::new(seed, 0),
            )?;
            mc_test(&statistic, &table, tail, alpha)?
        }
        other => return Err(format!("invalid method `{other}` (expected mc|asymptotic)").into()),
    };

    let reject = result.reject;
    let null_desc = null.as_ref().map(|f| f.to_string());
    let output = TestOutput {
        result,
        input: json!({
            "path": input.display().to_string(),
            "observations": raw.len(),
            "null": null_desc,
        }),
        effective_config: json!({
            "m": m,
            "scheme": scheme.to_string(),
            "kernel": kernel.label(),
            "method": method,
            "tail": tail.to_string(),
            "alpha": alpha,
            "seed": seed,
            "reps": reps,
        }),
    };
    print_json(&output)?;
    Ok(if reject && exit_on_reject {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------------
// critical

#[derive(Args, Debug)]
pub struct CriticalArgs {
    /// Sample-size parameter (data files have n - 1 observations)
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub kernel: Option<String>,
    /// Significance levels; each contributes the quantiles a/2, a, 1-a, 1-a/2
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the full sorted null sample in the JSON output
    #[arg(long)]
    pub full_samples: bool,
}

pub fn cmd_critical(args: CriticalArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let n = args.n.or(cfg.take("n")?).ok_or("missing --n")?;
    let m = args.m.or(cfg.take("m")?).unwrap_or(1);
    let scheme: Scheme = args
        .scheme
        .or(cfg.take("scheme")?)
        .map(|s| parse_with(&s, "scheme"))
        .transpose()?
        .unwrap_or(Scheme::Overlapping);
    let kernel_spec = args
        .kernel
        .or(cfg.take("kernel")?)
        .unwrap_or_else(|| "gini:r=2".into());
    let kernel: KernelSpec = parse_with(&kernel_spec, "kernel")?;
    let alphas = args.alpha.or(cfg.take("alpha")?).unwrap_or(vec![0.05]);
    let reps = args.reps.or(cfg.take("reps")?).unwrap_or(10_000);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let full_samples = args.full_samples || cfg.take("full-samples")?.unwrap_or(false);
    cfg.finish()?;

    let mut probs = Vec::new();
    for &a in &alphas {
        probs.extend([a / 2.0, a, 1.0 - a, 1.0 - a / 2.0]);
    }
    probs.sort_unstable_by(f64::total_cmp);
    probs.dedup();

    let table = mc_critical(n, m, scheme, &kernel, &probs, reps, RngSpec::new(seed, 0))?;
    let mut out = serde_json::to_value(&table)?;
    if !full_samples {
        out.as_object_mut().unwrap().remove("samples");
    }
    out.as_object_mut().unwrap().insert(
        "effective_config".into(),
        json!({
            "n": n,
            "m": m,
            "scheme": scheme.to_string(),
            "kernel": kernel.label(),
            "alpha": alphas,
            "reps": reps,
            "seed": seed,
        }),
    );
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// moments

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// analytic | mc
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn moment_mode(mode: &str, reps: usize, seed: u64) -> CliResult<MomentMode> {
    match mode {
        "analytic" => Ok(MomentMode::Analytic),
        "mc" => Ok(MomentMode::MonteCarlo {
            reps,
            spec: RngSpec::new(seed, 0),
        }),
        other => Err(format!("invalid mode `{other}` (expected analytic|mc)").into()),
    }
}

pub fn cmd_moments(args: MomentsArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let kernel_spec = args
        .kernel
        .or(cfg.take("kernel")?)
        .unwrap_or_else(|| "gini:r=2".into());
    let kernel: KernelSpec = parse_with(&kernel_spec, "kernel")?;
    let m = args.m.or(cfg.take("m")?).unwrap_or(1);
    let mode = args
        .mode
        .or(cfg.take("mode")?)
        .unwrap_or_else(|| "analytic".into());
    let reps = args.reps.or(cfg.take("reps")?).unwrap_or(100_000);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    cfg.finish()?;

    let h = pair_kernel(&kernel)?;
    let km = moments(&h, m, moment_mode(&mode, reps, seed)?)?;
    let mut out = serde_json::to_value(&km)?;
    out.as_object_mut().unwrap().insert(
        "effective_config".into(),
        json!({
            "kernel": kernel.label(),
            "m": m,
            "mode": mode,
            "reps": reps,
            "seed": seed,
        }),
    );
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// efficacy

#[derive(Args, Debug)]
pub struct EfficacyArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Perturbation shape: sine | bump
    #[arg(long = "L")]
    pub l: Option<String>,
    /// analytic | mc
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Kernels to compute relative efficiencies against (repeatable)
    #[arg(long, action = clap::ArgAction::Append)]
    pub compare: Option<Vec<String>>,
}

pub fn cmd_efficacy(args: EfficacyArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let kernel_spec = args
        .kernel
        .or(cfg.take("kernel")?)
        .unwrap_or_else(|| "gini:r=2".into());
    let kernel: KernelSpec = parse_with(&kernel_spec, "kernel")?;
    let m = args.m.or(cfg.take("m")?).unwrap_or(1);
    let shape_name = args.l.or(cfg.take("L")?).unwrap_or_else(|| "sine".into());
    let shape = ShapeKind::parse(&shape_name)?.shape();
    let mode = args
        .mode
        .or(cfg.take("mode")?)
        .unwrap_or_else(|| "analytic".into());
    let reps = args.reps.or(cfg.take("reps")?).unwrap_or(200_000);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let compare = args.compare.or(cfg.take("compare")?).unwrap_or_default();
    cfg.finish()?;

    let h = pair_kernel(&kernel)?;
    // Comparison runs reuse the same seed, so Monte Carlo comparisons see
    // common random numbers.
    let mut report = spacings_gof::efficacy(&h, m, &shape, moment_mode(&mode, reps, seed)?)?;
    for other_spec in &compare {
        let other_kernel: KernelSpec = parse_with(other_spec, "kernel")?;
        let other_h = pair_kernel(&other_kernel)?;
        let other =
            spacings_gof::efficacy(&other_h, m, &shape, moment_mode(&mode, reps, seed)?)?;
        report.add_comparison(&other)?;
    }

    let mut out = serde_json::to_value(&report)?;
    out.as_object_mut().unwrap().insert(
        "effective_config".into(),
        json!({
            "kernel": kernel.label(),
            "m": m,
            "L": shape_name,
            "mode": mode,
            "reps": reps,
            "seed": seed,
            "compare": compare,
        }),
    );
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// power

#[derive(Args, Debug)]
pub struct PowerArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "critical-reps")]
    pub critical_reps: Option<usize>,
    /// Alternative spec, repeatable: uniform | beta:<a>,<b> | local:<sine|bump>
    #[arg(long = "alternatives", action = clap::ArgAction::Append)]
    pub alternatives: Option<Vec<String>>,
    #[arg(long = "m-values", value_delimiter = ',')]
    pub m_values: Option<Vec<usize>>,
    #[arg(long = "r-values", value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
    /// overlapping | disjoint (comma-separated for both)
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    #[arg(long)]
    pub tail: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for power.csv and power.json; without it, JSON on stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_study_files(
    study: &PowerStudy,
    dir: &Path,
    csv_names: &[(String, Vec<usize>)],
    json_name: &str,
) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, table_indices) in csv_names {
        let mut text = String::from(csv_header());
        text.push('\n');
        for &t in table_indices {
            for row in &study.tables[t].rows {
                text.push_str(&row_csv_line(study, row));
                text.push('\n');
            }
        }
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path.display().to_string());
    }
    let path = dir.join(json_name);
    std::fs::write(&path, serde_json::to_string_pretty(study)?)?;
    written.push(path.display().to_string());
    Ok(written)
}

pub fn cmd_power(args: PowerArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let alternatives_spec = args
        .alternatives
        .or(cfg.take("alternatives")?)
        .ok_or("missing --alternatives (repeat the flag per alternative)")?;
    let alternatives = alternatives_spec
        .iter()
        .map(|s| Alternative::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let schemes = match args.schemes.or(cfg.take("schemes")?) {
        Some(list) => list
            .iter()
            .map(|s| parse_with(s, "scheme"))
            .collect::<CliResult<Vec<Scheme>>>()?,
        None => vec![Scheme::Disjoint, Scheme::Overlapping],
    };
    let study_cfg = PowerStudyConfig {
        n: args.n.or(cfg.take("n")?).unwrap_or(50),
        alpha: args.alpha.or(cfg.take("alpha")?).unwrap_or(0.05),
        reps: args.reps.or(cfg.take("reps")?).unwrap_or(10_000),
        critical_reps: args
            .critical_reps
            .or(cfg.take("critical-reps")?)
            .unwrap_or(100_000),
        alternatives,
        m_values: args
            .m_values
            .or(cfg.take("m-values")?)
            .unwrap_or_else(|| vec![1, 2, 4, 5, 10]),
        r_values: args
            .r_values
            .or(cfg.take("r-values")?)
            .unwrap_or_else(|| vec![1.0, 1.5, 2.0]),
        schemes,
        tail: args
            .tail
            .or(cfg.take("tail")?)
            .map(|s| parse_with(&s, "tail"))
            .transpose()?
            .unwrap_or(Tail::TwoSided),
        seed: RngSpec::new(args.seed.or(cfg.take("seed")?).unwrap_or(0), 0),
    };
    let out = args.out.or(cfg.take("out")?);
    cfg.finish()?;

    let study = run_power_study(&study_cfg)?;
    match out {
        None => print_json(&study)?,
        Some(dir) => {
            let all: Vec<usize> = (0..study.tables.len()).collect();
            let written = write_study_files(
                &study,
                &dir,
                &[("power.csv".into(), all)],
                "power.json",
            )?;
            print_json(&json!({ "written": written }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// tables

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "critical-reps")]
    pub critical_reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for table_<k>.csv and tables.json; without it, JSON on stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_tables(args: TablesArgs, mut cfg: ConfigMap) -> CliResult<ExitCode> {
    let reps = args.reps.or(cfg.take("reps")?).unwrap_or(10_000);
    let critical_reps = args
        .critical_reps
        .or(cfg.take("critical-reps")?)
        .unwrap_or(100_000);
    let seed = args.seed.or(cfg.take("seed")?).unwrap_or(0);
    let out = args.out.or(cfg.take("out")?);
    cfg.finish()?;

    let study = spacings_gof::reproduce_paper_tables(reps, critical_reps, RngSpec::new(seed, 0))?;
    match out {
        None => print_json(&study)?,
        Some(dir) => {
            let csvs: Vec<(String, Vec<usize>)> = (0..study.tables.len())
                .map(|t| (format!("table_{}.csv", t + 1), vec![t]))
                .collect();
            let written = write_study_files(&study, &dir, &csvs, "tables.json")?;
            print_json(&json!({ "written": written }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
