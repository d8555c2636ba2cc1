use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcal_core::enumerate::{calibrated_set_with, multicalibrated_set_with};
use mcal_core::estimators::{dce_interval, dimc_interval};
use mcal_core::instances::InstanceSpecParams;
use mcal_core::io::{instance_to_json, read_instance};
use mcal_core::landscape::{local_min_probe_with, Metric};
use mcal_core::multiaccuracy::dma_problem;
use mcal_core::rational::{format_rational, parse_rational};
use mcal_core::{Budget, Instance, Rational, Subgroup};
use mcal_audit::audit::{audit, AuditMetric, AuditOptions, Exact};
use mcal_audit::verify;
use mcal_audit::{exit, CliError};
use serde::Serialize;
use serde_json::json;

/// Exact calibration and multicalibration audits on finite domains.
#[derive(Parser)]
#[command(name = "mcal-audit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every metric for an instance file.
    Audit(AuditArgs),
    /// List the calibrated or multicalibrated predictors.
    Enumerate(EnumerateArgs),
    /// Sample-based interval estimates.
    Estimate(EstimateArgs),
    /// Write one of the built-in instance families as JSON.
    Generate(GenerateArgs),
    /// Probe for improving perturbations around the audited predictor.
    Landscape(LandscapeArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Human-readable output in place of compact JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct AuditArgs {
    instance: PathBuf,
    /// Metrics to compute; defaults to wdmc, dmc, dimc, wdma, dma.
    #[arg(long, value_enum, value_delimiter = ',')]
    metrics: Vec<MetricArg>,
    /// Highest degree for the degree-r membership flags and the grid oracle.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Grid resolution for the low-degree oracle.
    #[arg(long, default_value_t = 20)]
    grid: u32,
    /// Include per-metric wall time (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Write the distance-to-multiaccuracy linear program as JSON to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Wdmc,
    Dmc,
    Dimc,
    Wdma,
    Dma,
    Dcma,
    Lowdeg,
}

impl From<MetricArg> for AuditMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Wdmc => AuditMetric::Wdmc,
            MetricArg::Dmc => AuditMetric::Dmc,
            MetricArg::Dimc => AuditMetric::Dimc,
            MetricArg::Wdma => AuditMetric::Wdma,
            MetricArg::Dma => AuditMetric::Dma,
            MetricArg::Dcma => AuditMetric::Dcma,
            MetricArg::Lowdeg => AuditMetric::Lowdeg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    Cal,
    Mcal,
}

#[derive(Args)]
struct EnumerateArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    set: SetKind,
    /// Group index for `--set cal`; the whole domain when omitted.
    #[arg(long)]
    group: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateMetric {
    Dce,
    Dimc,
}

#[derive(Args)]
struct EstimateArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    metric: EstimateMetric,
    /// Group index for `dce`; the whole domain when omitted.
    #[arg(long)]
    group: Option<usize>,
    #[arg(long, value_parser = rational)]
    eps: Rational,
    #[arg(long, value_parser = rational)]
    delta: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent repetitions with seeds `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// CSV rows instead of JSON.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    ThreePoint,
    WdmcLocalMin,
    Ring,
    Hypercube,
    Cdmc,
    Fibonacci,
    Dcma,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, value_parser = rational, default_value = "0")]
    alpha: Rational,
    #[arg(long, value_parser = rational, default_value = "1/200")]
    eps: Rational,
    #[arg(long, value_parser = rational, default_value = "1/10")]
    delta: Rational,
    /// Points per block (ring) or domain size (random).
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Dimension (hypercube), index (fibonacci) or group count (random).
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    grid: u32,
    /// Hypercube: seed of the random half carrying the ground truth.
    #[arg(long)]
    subset_seed: Option<u64>,
    /// dcma: emit the perturbed ground truth.
    #[arg(long)]
    perturbed: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LandscapeArgs {
    instance: PathBuf,
    #[arg(long, default_value = "wdmc")]
    metric: Metric,
    #[arg(long, value_parser = rational, default_value = "1/100")]
    radius: Rational,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "paper")]
    suite: String,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn emit(output: &Output, text: &str) -> Result<(), CliError> {
    match &output.out {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T, pretty: bool) -> Result<String, CliError> {
    Ok(if pretty { serde_json::to_string_pretty(v)? } else { serde_json::to_string(v)? })
}

fn load(path: &Path) -> Result<Instance, CliError> {
    Ok(read_instance(path)?)
}

fn group_arg(inst: &Instance, group: Option<usize>) -> Result<Subgroup, CliError> {
    match group {
        None => Ok(Subgroup::full(inst.n())),
        Some(i) => inst
            .groups()
            .groups()
            .get(i)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("group {i} out of range; the instance has {}", inst.groups().len()))),
    }
}

fn cmd_audit(a: AuditArgs, budget: Budget) -> Result<u8, CliError> {
    let inst = load(&a.instance)?;
    if let Some(p) = &a.dump_lp {
        fs::write(p, serde_json::to_string_pretty(&dma_problem(&inst, inst.audited()))? + "\n")?;
    }
    let metrics = if a.metrics.is_empty() {
        AuditMetric::DEFAULT.to_vec()
    } else {
        a.metrics.iter().map(|&m| m.into()).collect()
    };
    let opts = AuditOptions { metrics, max_degree: a.degree, lowdeg_grid: a.grid, timing: a.timing, budget };
    let report = audit(&inst, &opts)?;
    let text = if a.output.pretty { report.table() } else { to_json(&report, false)? };
    emit(&a.output, text.trim_end())?;
    Ok(exit::PASS)
}

fn cmd_enumerate(a: EnumerateArgs, budget: Budget) -> Result<u8, CliError> {
    let inst = load(&a.instance)?;
    let (scope, predictors, free) = match a.set {
        SetKind::Cal => {
            let s = group_arg(&inst, a.group)?;
            let cal = calibrated_set_with(&inst, &s, &budget)?;
            (s.to_string(), cal.predictors, Vec::new())
        }
        SetKind::Mcal => {
            let set = multicalibrated_set_with(&inst, &budget)?;
            ("mcal".to_string(), set.members, set.free)
        }
    };
    let rows: Vec<Vec<String>> = predictors.iter().map(|g| g.to_strings()).collect();
    let text = if a.output.pretty {
        let mut t = format!("{scope}: {} predictors\n", rows.len());
        for r in &rows {
            t += &format!("  ({})\n", r.join(", "));
        }
        t
    } else {
        to_json(&json!({ "scope": scope, "free": free, "count": rows.len(), "predictors": rows }), false)?
    };
    emit(&a.output, text.trim_end())?;
    Ok(exit::PASS)
}

fn cmd_estimate(a: EstimateArgs) -> Result<u8, CliError> {
    let inst = load(&a.instance)?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let s = group_arg(&inst, a.group)?;
    let mut rows = Vec::new();
    for t in 0..a.trials {
        let seed = a.seed.wrapping_add(t);
        let est = match a.metric {
            EstimateMetric::Dce => dce_interval(&inst, &s, &a.eps, &a.delta, seed)?,
            EstimateMetric::Dimc => dimc_interval(&inst, &a.eps, &a.delta, seed)?,
        };
        rows.push((seed, est.to_report()));
    }
    let text = if a.csv {
        let mut t = String::from("seed,point,lower,upper,samples_used\n");
        for (seed, r) in &rows {
            t += &format!("{seed},{},{},{},{}\n", r.point, r.lower, r.upper, r.samples_used);
        }
        t
    } else if rows.len() == 1 {
        to_json(&rows[0].1, a.output.pretty)?
    } else {
        let list: Vec<_> = rows.iter().map(|(seed, r)| json!({ "seed": seed, "estimate": r })).collect();
        to_json(&list, a.output.pretty)?
    };
    emit(&a.output, text.trim_end())?;
    Ok(exit::PASS)
}

fn cmd_generate(a: GenerateArgs) -> Result<u8, CliError> {
    let params = match a.family {
        Family::ThreePoint => InstanceSpecParams::ThreePoint { alpha: a.alpha },
        Family::WdmcLocalMin => InstanceSpecParams::WdmcLocalMin { eps: a.eps, delta: a.delta },
        Family::Ring => InstanceSpecParams::Ring { n: a.n },
        Family::Hypercube => InstanceSpecParams::Hypercube {
            k: u32::try_from(a.k).map_err(|_| CliError::Usage("--k too large".into()))?,
            subset_seed: a.subset_seed,
        },
        Family::Cdmc => InstanceSpecParams::Cdmc,
        Family::Fibonacci => InstanceSpecParams::Fibonacci { k: a.k, eps: a.eps },
        Family::Dcma => InstanceSpecParams::Dcma { eps: a.eps, perturbed: a.perturbed },
        Family::Random => InstanceSpecParams::Random { n: a.n, k: a.k, seed: a.seed, grid: a.grid },
    };
    let inst = params.generate()?;
    emit(&a.output, &instance_to_json(&inst, a.output.pretty)?)?;
    Ok(exit::PASS)
}

fn cmd_landscape(a: LandscapeArgs, budget: Budget) -> Result<u8, CliError> {
    let inst = load(&a.instance)?;
    let r = local_min_probe_with(a.metric, &inst, &a.radius, a.trials, a.seed, &budget)?;
    let witness = r.witness.as_ref().map(|(t, g, v)| {
        json!({
            "trial": t,
            "predictor": g.to_strings(),
            "perturbation": v.iter().map(format_rational).collect::<Vec<_>>(),
        })
    });
    let report = json!({
        "metric": r.metric,
        "radius": Exact::from(&r.radius),
        "trials": r.trials,
        "seed": a.seed,
        "base": Exact::from(&r.base),
        "best": Exact::from(&r.best),
        "decrease": Exact::from(&r.decrease),
        "found_decrease": r.found_decrease(),
        "witness": witness,
    });
    emit(&a.output, &to_json(&report, a.output.pretty)?)?;
    Ok(exit::PASS)
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, CliError> {
    if a.suite != "paper" {
        return Err(CliError::Usage(format!("unknown suite {:?}; the only suite is \"paper\"", a.suite)));
    }
    let mut rows = Vec::new();
    for c in verify::suite().iter().filter(|c| a.only.is_empty() || a.only.contains(&c.id)) {
        let row = verify::run(c);
        println!("{row}");
        rows.push(row);
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", rows.len() - failed);
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&rows)? + "\n")?;
    }
    Ok(if failed == 0 { exit::PASS } else { exit::ACCEPTANCE_FAILURE })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let budget = Budget::from_env()?;
    match cli.command {
        Command::Audit(a) => cmd_audit(a, budget),
        Command::Enumerate(a) => cmd_enumerate(a, budget),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Landscape(a) => cmd_landscape(a, budget),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT_ERROR } else { exit::PASS });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
