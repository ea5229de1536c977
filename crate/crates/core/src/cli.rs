//! Command-line interface: simulation studies, fitting on ingested data,
//! bootstrap bands, and benchmarking.

use crate::error::{Error, Result};
use crate::estimators::{default_lambda_grid, select_k_bic, EstimatorKind, SimexConfig};
use crate::harness::{
    benchmark_fit, bootstrap_ci, fit_estimator, run_monte_carlo, write_band_csv, write_curve_csv,
    write_report_csv, write_report_json, FitOptions, MonteCarloReport,
};
use crate::ingest::{
    assemble_dataset, load_long_csv, preprocess, LongSchema, OutcomeSchema, PreprocessRules,
};
use crate::metrics::percent_difference;
use crate::presets::{baseline, preset, PresetScenario};
use crate::simgen::{generate_dataset, Dataset, ScenarioConfig};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "fivreg", version, about = "Measurement-error-corrected scalar-on-function regression with a functional instrumental variable")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for replicate-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run Monte Carlo simulation studies and emit table reports.
    Simulate(SimulateArgs),
    /// Fit the estimators on a CSV dataset.
    Fit(FitArgs),
    /// Bootstrap confidence bands for one estimator.
    Bootstrap(BootstrapArgs),
    /// Benchmark single-fit wall-clock time per estimator.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    /// Comma-separated estimators (oracle, naive, pw-2sls, multi-2sls, simex).
    #[arg(long)]
    estimators: Option<String>,

    #[arg(long, default_value_t = 5)]
    k_min: usize,

    #[arg(long, default_value_t = 9)]
    k_max: usize,

    /// SIMEX simulated datasets per lambda.
    #[arg(long, default_value_t = 50)]
    simex_nsim: usize,

    /// Upper end of the SIMEX lambda grid.
    #[arg(long, default_value_t = 2.0001)]
    lambda_max: f64,

    /// Spacing of the SIMEX lambda grid.
    #[arg(long, default_value_t = 0.05)]
    lambda_step: f64,
}

impl EstimatorArgs {
    fn fit_options(&self) -> Result<FitOptions> {
        let estimators = match &self.estimators {
            None => EstimatorKind::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<_>>>()?,
        };
        let opts = FitOptions {
            estimators,
            k_range: (self.k_min, self.k_max),
            order: 4,
            simex: SimexConfig {
                lambda_grid: default_lambda_grid(self.lambda_max, self.lambda_step),
                n_sim: self.simex_nsim,
                ..SimexConfig::default()
            },
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario preset: study1 through study5.
    #[arg(long)]
    preset: Option<String>,

    /// JSON scenario config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    n: Option<usize>,

    #[arg(long)]
    n_grid: Option<usize>,

    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ScenarioArgs {
    fn scenarios(&self) -> Result<Vec<PresetScenario>> {
        let mut rows = match (&self.preset, &self.config) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "--preset and --config are mutually exclusive".into(),
                ))
            }
            (Some(name), None) => preset(name, self.seed)?,
            (None, Some(path)) => {
                let file = File::open(path)?;
                let config: ScenarioConfig = serde_json::from_reader(file)?;
                vec![PresetScenario {
                    label: "config".into(),
                    config: ScenarioConfig {
                        seed: self.seed,
                        ..config
                    },
                }]
            }
            (None, None) => vec![PresetScenario {
                label: "baseline".into(),
                config: baseline(self.seed),
            }],
        };
        for row in &mut rows {
            if let Some(n) = self.n {
                row.config.n = n;
            }
            if let Some(n_grid) = self.n_grid {
                row.config.n_grid = n_grid;
            }
            row.config.validate()?;
        }
        Ok(rows)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(flatten)]
    estimator: EstimatorArgs,

    /// Monte Carlo replicates per scenario.
    #[arg(long, default_value_t = 500)]
    reps: usize,

    /// Report file; stdout when omitted. Curve files are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Long-format curves CSV (subject, role, day, time, value).
    #[arg(long)]
    data: Option<PathBuf>,

    /// Outcome CSV joined on subject id.
    #[arg(long)]
    outcomes: Option<PathBuf>,

    /// JSON file with optional long_schema, outcome_schema, and rules keys.
    #[arg(long)]
    data_config: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let data = self.data.as_ref().ok_or_else(|| {
            Error::InvalidConfig("--data is required when fitting real data".into())
        })?;
        let outcomes = self.outcomes.as_ref().ok_or_else(|| {
            Error::InvalidConfig("--outcomes is required when fitting real data".into())
        })?;
        let (long_schema, outcome_schema, rules) = match &self.data_config {
            None => (
                LongSchema::default(),
                OutcomeSchema::default(),
                PreprocessRules::default(),
            ),
            Some(path) => {
                #[derive(serde::Deserialize, Default)]
                #[serde(deny_unknown_fields)]
                struct DataConfig {
                    long_schema: Option<LongSchema>,
                    outcome_schema: Option<OutcomeSchema>,
                    rules: Option<PreprocessRules>,
                }
                let parsed: DataConfig = serde_json::from_reader(File::open(path)?)?;
                (
                    parsed.long_schema.unwrap_or_default(),
                    parsed.outcome_schema.unwrap_or_default(),
                    parsed.rules.unwrap_or_default(),
                )
            }
        };
        let (records, issues) = load_long_csv(File::open(data)?, &long_schema)?;
        for issue in &issues {
            eprintln!("warning: skipped line {}: {}", issue.line, issue.message);
        }
        let curves = preprocess(&records, &rules)?;
        if !curves.dropped.is_empty() {
            eprintln!(
                "note: dropped {} subject(s) without qualifying days",
                curves.dropped.len()
            );
        }
        let (dataset, report) = assemble_dataset(&curves, File::open(outcomes)?, &outcome_schema)?;
        if !report.unmatched_curves.is_empty() || !report.unmatched_outcomes.is_empty() {
            eprintln!(
                "note: unmatched subjects: {} with curves only, {} with outcomes only",
                report.unmatched_curves.len(),
                report.unmatched_outcomes.len()
            );
        }
        Ok(dataset)
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    estimator: EstimatorArgs,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Simulated-scenario fallback used when --data is absent.
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(flatten)]
    estimator: EstimatorArgs,

    /// Bootstrap resamples.
    #[arg(long, default_value_t = 500)]
    bootstrap_reps: usize,

    /// Confidence level for the pointwise bands.
    #[arg(long, default_value_t = 0.95)]
    level: f64,

    /// Band file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(flatten)]
    estimator: EstimatorArgs,

    /// Timed fits per estimator (after one warmup).
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse arguments and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e @ (Error::InvalidConfig(_) | Error::Schema(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn open_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Fit(args) => fit(args),
        Command::Bootstrap(args) => bootstrap(args),
        Command::Bench(args) => bench(args),
    }
}

fn config_echo(args: impl std::fmt::Debug) -> serde_json::Value {
    serde_json::json!({ "resolved": format!("{args:?}") })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let scenarios = args.scenario.scenarios()?;
    let opts = args.estimator.fit_options()?;
    let echo = serde_json::json!({
        "command": "simulate",
        "reps": args.reps,
        "seed": args.scenario.seed,
        "scenarios": scenarios,
        "options": opts,
    });

    let mut reports: Vec<MonteCarloReport> = Vec::with_capacity(scenarios.len());
    for row in &scenarios {
        reports.push(run_monte_carlo(&row.label, &row.config, args.reps, &opts)?);
    }
    for report in &reports {
        if report.flagged {
            eprintln!(
                "warning: scenario '{}' had > 1% estimator failures",
                report.label
            );
        }
    }

    let mut sink = open_sink(&args.out)?;
    match args.format.as_str() {
        "csv" => {
            writeln!(sink, "# config: {echo}")?;
            write_report_csv(&reports, &mut sink)?;
        }
        "json" => write_report_json(&reports, &echo, &mut sink)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    }
    drop(sink);

    if let Some(out) = &args.out {
        for (i, report) in reports.iter().enumerate() {
            let path = curve_path(out, i);
            let mut file = File::create(path)?;
            write_curve_csv(report, &echo, &mut file)?;
        }
    }
    Ok(())
}

fn curve_path(out: &Path, index: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}_curves_{index}.csv"))
}

fn fit(args: FitArgs) -> Result<()> {
    let data = args.data.load()?;
    let opts = args.estimator.fit_options()?;
    let wt = data.weights.as_ref().map(|w| w.view());
    let k = select_k_bic(
        &data.w,
        data.y.view(),
        data.z.view(),
        opts.k_range,
        opts.order,
        wt,
    )?;
    let naive = fit_estimator(EstimatorKind::Naive, &data, k, &opts, args.seed)?;
    let mut fits = serde_json::Map::new();
    for &kind in &opts.estimators {
        let fit = if kind == EstimatorKind::Naive {
            naive.clone()
        } else {
            fit_estimator(kind, &data, k, &opts, args.seed)?
        };
        let mut entry = serde_json::json!({
            "beta0": fit.beta0,
            "gamma": data
                .z_names
                .iter()
                .zip(fit.gamma.iter())
                .map(|(name, &g)| serde_json::json!({ "name": name, "estimate": g }))
                .collect::<Vec<_>>(),
            "beta1": fit.beta1_curve.to_vec(),
        });
        if kind != EstimatorKind::Naive {
            let (pd, excluded) =
                percent_difference(fit.beta1_curve.view(), naive.beta1_curve.view())?;
            entry["percent_difference_vs_naive"] = serde_json::json!(pd);
            entry["percent_difference_excluded_points"] = serde_json::json!(excluded);
        }
        fits.insert(kind.name().to_string(), entry);
    }
    let doc = serde_json::json!({
        "config": config_echo(&args),
        "k": k,
        "n": data.n(),
        "t": data.w.grid().points().to_vec(),
        "fits": fits,
    });
    let mut sink = open_sink(&args.out)?;
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    writeln!(sink)?;
    Ok(())
}

fn bootstrap(args: BootstrapArgs) -> Result<()> {
    let data = if args.data.data.is_some() {
        args.data.load()?
    } else {
        let scenarios = args.scenario.scenarios()?;
        if scenarios.len() != 1 {
            return Err(Error::InvalidConfig(
                "bootstrap needs a single scenario; presets with several rows are ambiguous"
                    .into(),
            ));
        }
        generate_dataset(&scenarios[0].config)?
    };
    let opts = args.estimator.fit_options()?;
    if opts.estimators.len() != 1 {
        return Err(Error::InvalidConfig(
            "bootstrap takes exactly one --estimators entry".into(),
        ));
    }
    let band = bootstrap_ci(
        &data,
        opts.estimators[0],
        &opts,
        args.bootstrap_reps,
        args.level,
        args.scenario.seed,
    )?;
    if band.retries > 0 {
        eprintln!("note: {} resample(s) were redrawn after fit failures", band.retries);
    }
    let echo = serde_json::json!({
        "command": "bootstrap",
        "estimator": band.estimator.name(),
        "B": band.b,
        "level": band.level,
        "seed": args.scenario.seed,
    });
    let mut sink = open_sink(&args.out)?;
    match args.format.as_str() {
        "csv" => write_band_csv(&band, &echo, &mut sink)?,
        "json" => {
            let doc = serde_json::json!({ "config": echo, "band": band });
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (expected csv or json)"
            )))
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let scenarios = args.scenario.scenarios()?;
    if scenarios.len() != 1 {
        return Err(Error::InvalidConfig(
            "bench needs a single scenario".into(),
        ));
    }
    let opts = args.estimator.fit_options()?;
    let mut results = Vec::new();
    for &kind in &opts.estimators {
        results.push(benchmark_fit(&scenarios[0].config, kind, args.reps, &opts)?);
    }
    let doc = serde_json::json!({
        "config": config_echo(&args),
        "results": results,
    });
    let mut sink = open_sink(&args.out)?;
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    writeln!(sink)?;
    Ok(())
}
