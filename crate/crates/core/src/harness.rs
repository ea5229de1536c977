//! Monte Carlo orchestration, bootstrap confidence bands, single-fit
//! benchmarking, and report emission.

use crate::error::{Error, Result};
use crate::estimators::{
    fit_multi2sls, fit_naive, fit_oracle, fit_pw2sls, fit_simex, select_k_bic, EstimatorKind,
    FitResult, SimexConfig,
};
use crate::grid::FunctionalSample;
use crate::metrics::{abias2, aimse, avar, mspee, quantile_linear, CurveEnsemble};
use crate::simgen::{generate_dataset, substream_rng, substream_seed, true_beta1, Dataset, ScenarioConfig};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Settings shared by Monte Carlo runs, bootstraps, and benchmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub estimators: Vec<EstimatorKind>,
    pub k_range: (usize, usize),
    pub order: usize,
    pub simex: SimexConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimators: EstimatorKind::ALL.to_vec(),
            k_range: (5, 9),
            order: 4,
            simex: SimexConfig::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators requested".into()));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(Error::InvalidConfig("duplicate estimator requested".into()));
        }
        self.simex.validate()
    }
}

/// Fit one estimator on a dataset. The SIMEX seed derives its own
/// sub-streams, so passing the replicate seed is safe.
pub fn fit_estimator(
    kind: EstimatorKind,
    data: &Dataset,
    k: usize,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitResult> {
    let wt = data.weights.as_ref().map(|w| w.view());
    match kind {
        EstimatorKind::Oracle => {
            let x = data.x.as_ref().ok_or_else(|| {
                Error::InvalidConfig("oracle estimator requires the latent predictor".into())
            })?;
            fit_oracle(x, data.y.view(), data.z.view(), k, opts.order, wt)
        }
        EstimatorKind::Naive => fit_naive(&data.w, data.y.view(), data.z.view(), k, opts.order, wt),
        EstimatorKind::Pw2sls => {
            fit_pw2sls(&data.w, &data.m, data.y.view(), data.z.view(), k, opts.order, wt)
        }
        EstimatorKind::Multi2sls => {
            fit_multi2sls(&data.w, &data.m, data.y.view(), data.z.view(), k, opts.order, wt)
        }
        EstimatorKind::Simex => fit_simex(
            &data.w,
            &data.m,
            data.y.view(),
            data.z.view(),
            k,
            opts.order,
            wt,
            &opts.simex,
            seed,
        ),
    }
}

/// Aggregated performance of one estimator over a Monte Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub abias2: f64,
    pub avar: f64,
    pub aimse: f64,
    pub mean_mspee: f64,
    pub mean_fit_seconds: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_curve: Vec<f64>,
}

/// One row-block of a simulation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub label: String,
    pub scenario: ScenarioConfig,
    pub reps: usize,
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub summaries: Vec<EstimatorSummary>,
    /// Set when any estimator failed on more than 1% of replicates.
    pub flagged: bool,
}

impl MonteCarloReport {
    pub fn summary(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == kind)
    }
}

struct ReplicateOutcome {
    curves: Vec<Option<(Array1<f64>, f64, f64)>>,
}

/// Run `reps` independent replicates of a scenario and aggregate the
/// metrics. Replicate seeds derive from (scenario seed, replicate index),
/// so the generated data never depends on which estimators run, and the
/// aggregation is independent of thread schedule.
pub fn run_monte_carlo(
    label: &str,
    cfg: &ScenarioConfig,
    reps: usize,
    opts: &FitOptions,
) -> Result<MonteCarloReport> {
    cfg.validate()?;
    opts.validate()?;
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }

    let outcomes: Vec<Result<ReplicateOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = substream_seed(cfg.seed, "replicate", r as u64);
            let rep_cfg = ScenarioConfig {
                seed: rep_seed,
                ..cfg.clone()
            };
            let data = generate_dataset(&rep_cfg)?;
            let truth = true_beta1(data.w.grid());
            let k = select_k_bic(
                &data.w,
                data.y.view(),
                data.z.view(),
                opts.k_range,
                opts.order,
                data.weights.as_ref().map(|w| w.view()),
            )?;
            let curves = opts
                .estimators
                .iter()
                .map(|&kind| {
                    let start = Instant::now();
                    match fit_estimator(kind, &data, k, opts, rep_seed) {
                        Ok(fit) => {
                            let secs = start.elapsed().as_secs_f64();
                            let err =
                                mspee(fit.beta1_curve.view(), truth.view(), data.w.grid()).ok()?;
                            Some((fit.beta1_curve, err, secs))
                        }
                        Err(_) => None,
                    }
                })
                .collect();
            Ok(ReplicateOutcome { curves })
        })
        .collect();

    let grid = crate::grid::TimeGrid::uniform(cfg.n_grid)?;
    let truth = true_beta1(&grid);

    let mut summaries = Vec::with_capacity(opts.estimators.len());
    let mut flagged = false;
    for (e_idx, &kind) in opts.estimators.iter().enumerate() {
        let mut curves = Vec::with_capacity(reps);
        let mut mspee_sum = 0.0;
        let mut time_sum = 0.0;
        let mut failures = 0usize;
        for outcome in &outcomes {
            match outcome {
                Ok(rep) => match &rep.curves[e_idx] {
                    Some((curve, err, secs)) => {
                        curves.push(curve.clone());
                        mspee_sum += err;
                        time_sum += secs;
                    }
                    None => failures += 1,
                },
                Err(_) => failures += 1,
            }
        }
        let successes = curves.len();
        if successes == 0 {
            return Err(Error::InsufficientData {
                need: 1,
                got: 0,
            });
        }
        if failures * 100 > reps {
            flagged = true;
        }
        let mut stack = Array2::zeros((successes, grid.n_grid()));
        for (i, c) in curves.iter().enumerate() {
            stack.row_mut(i).assign(c);
        }
        let mean_curve = stack.mean_axis(Axis(0)).unwrap().to_vec();
        let ens = CurveEnsemble::new(stack, truth.clone(), grid.clone())?;
        summaries.push(EstimatorSummary {
            estimator: kind,
            abias2: abias2(&ens),
            avar: avar(&ens),
            aimse: aimse(&ens),
            mean_mspee: mspee_sum / successes as f64,
            mean_fit_seconds: time_sum / successes as f64,
            successes,
            failures,
            mean_curve,
        });
    }

    Ok(MonteCarloReport {
        label: label.to_string(),
        scenario: cfg.clone(),
        reps,
        grid: grid.points().to_vec(),
        truth: truth.to_vec(),
        summaries,
        flagged,
    })
}

/// One-sided summary of a covariate interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Pointwise percentile bootstrap band for the coefficient curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapBand {
    pub estimator: EstimatorKind,
    pub b: usize,
    pub level: f64,
    pub k: usize,
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// True where the interval excludes zero.
    pub significant: Vec<bool>,
    pub beta0: ScalarInterval,
    pub gamma: Vec<ScalarInterval>,
    pub retries: usize,
}

fn resample(data: &Dataset, idx: &[usize]) -> Result<Dataset> {
    let take_rows = |m: &Array2<f64>| {
        let mut out = Array2::zeros((idx.len(), m.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&m.row(i));
        }
        out
    };
    let take_curve = |f: &FunctionalSample<f64>| {
        FunctionalSample::new(take_rows(f.values()), f.grid().clone())
    };
    Ok(Dataset {
        y: idx.iter().map(|&i| data.y[i]).collect(),
        w: take_curve(&data.w)?,
        m: take_curve(&data.m)?,
        x: data.x.as_ref().map(take_curve).transpose()?,
        z: take_rows(&data.z),
        z_names: data.z_names.clone(),
        weights: data
            .weights
            .as_ref()
            .map(|w| idx.iter().map(|&i| w[i]).collect()),
    })
}

/// Nonparametric bootstrap: resample subjects with replacement, refit
/// (re-selecting K each time), and take pointwise percentile intervals.
pub fn bootstrap_ci(
    data: &Dataset,
    estimator: EstimatorKind,
    opts: &FitOptions,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapBand> {
    opts.validate()?;
    if b < 2 {
        return Err(Error::InvalidConfig("bootstrap needs B >= 2".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let n = data.n();
    let wt = data.weights.as_ref().map(|w| w.view());
    let k_full = select_k_bic(&data.w, data.y.view(), data.z.view(), opts.k_range, opts.order, wt)?;
    let point = fit_estimator(estimator, data, k_full, opts, substream_seed(seed, "point", 0))?;
    let n_grid = data.w.grid().n_grid();
    let p = data.z.ncols();

    let max_attempts = 2 * b + 100;
    let mut curves = Array2::zeros((b, n_grid));
    let mut beta0s = Vec::with_capacity(b);
    let mut gammas = Array2::zeros((b, p));
    let mut done = 0usize;
    let mut attempt = 0usize;
    let mut last_err: Option<Error> = None;
    while done < b {
        if attempt >= max_attempts {
            return Err(Error::BootstrapRetries {
                retries: attempt - done,
                source: Box::new(last_err.unwrap_or(Error::InsufficientData {
                    need: b,
                    got: done,
                })),
            });
        }
        let mut rng = substream_rng(seed, "bootstrap", attempt as u64);
        attempt += 1;
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let sample = resample(data, &idx)?;
        let swt = sample.weights.as_ref().map(|w| w.view());
        let refit = select_k_bic(
            &sample.w,
            sample.y.view(),
            sample.z.view(),
            opts.k_range,
            opts.order,
            swt,
        )
        .and_then(|k| {
            fit_estimator(estimator, &sample, k, opts, substream_seed(seed, "resample", attempt as u64))
        });
        match refit {
            Ok(fit) => {
                curves.row_mut(done).assign(&fit.beta1_curve);
                beta0s.push(fit.beta0);
                gammas.row_mut(done).assign(&fit.gamma);
                done += 1;
            }
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        }
    }
    let retries = attempt - b;

    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;
    let pct = |values: ArrayView1<f64>| -> Result<(f64, f64)> {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap stats"));
        Ok((quantile_linear(&v, lo_p)?, quantile_linear(&v, hi_p)?))
    };

    let mut lower = Vec::with_capacity(n_grid);
    let mut upper = Vec::with_capacity(n_grid);
    let mut significant = Vec::with_capacity(n_grid);
    for l in 0..n_grid {
        let (lo, hi) = pct(curves.column(l))?;
        significant.push(lo > 0.0 || hi < 0.0);
        lower.push(lo);
        upper.push(hi);
    }
    let beta0_arr = Array1::from(beta0s);
    let (b0_lo, b0_hi) = pct(beta0_arr.view())?;
    let mut gamma = Vec::with_capacity(p);
    for j in 0..p {
        let (lo, hi) = pct(gammas.column(j))?;
        gamma.push(ScalarInterval {
            name: data
                .z_names
                .get(j)
                .cloned()
                .unwrap_or_else(|| format!("z{j}")),
            estimate: point.gamma[j],
            lower: lo,
            upper: hi,
        });
    }

    Ok(BootstrapBand {
        estimator,
        b,
        level,
        k: k_full,
        grid: data.w.grid().points().to_vec(),
        estimate: point.beta1_curve.to_vec(),
        lower,
        upper,
        significant,
        beta0: ScalarInterval {
            name: "intercept".into(),
            estimate: point.beta0,
            lower: b0_lo,
            upper: b0_hi,
        },
        gamma,
        retries,
    })
}

/// Median wall-clock seconds for a single fit on a pre-generated dataset.
/// Dataset generation and the warmup fit are excluded from timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub estimator: EstimatorKind,
    pub reps: usize,
    pub k: usize,
    pub median_seconds: f64,
    pub times: Vec<f64>,
}

pub fn benchmark_fit(
    cfg: &ScenarioConfig,
    estimator: EstimatorKind,
    reps: usize,
    opts: &FitOptions,
) -> Result<BenchmarkResult> {
    if reps == 0 {
        return Err(Error::InvalidConfig("bench reps must be >= 1".into()));
    }
    let data = generate_dataset(cfg)?;
    let wt = data.weights.as_ref().map(|w| w.view());
    let k = select_k_bic(&data.w, data.y.view(), data.z.view(), opts.k_range, opts.order, wt)?;
    fit_estimator(estimator, &data, k, opts, cfg.seed)?;
    let mut times = Vec::with_capacity(reps);
    for r in 0..reps {
        let start = Instant::now();
        fit_estimator(estimator, &data, k, opts, substream_seed(cfg.seed, "bench", r as u64))?;
        times.push(start.elapsed().as_secs_f64());
    }
    let mut sorted = times.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let median_seconds = quantile_linear(&sorted, 0.5)?;
    Ok(BenchmarkResult {
        estimator,
        reps,
        k,
        median_seconds,
        times,
    })
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v}")
}

/// Table-layout CSV: one row per scenario, estimator × metric columns.
pub fn write_report_csv<W: Write>(reports: &[MonteCarloReport], out: &mut W) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let kinds: Vec<EstimatorKind> = reports[0].summaries.iter().map(|s| s.estimator).collect();
    let mut header = vec!["scenario".to_string(), "n".to_string()];
    for kind in &kinds {
        for metric in ["abias2", "avar", "aimse", "mean_mspee"] {
            header.push(format!("{}_{metric}", kind.name()));
        }
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(&header)?;
    for report in reports {
        let mut row = vec![report.label.clone(), report.scenario.n.to_string()];
        for kind in &kinds {
            let s = report.summary(*kind).ok_or_else(|| {
                Error::InvalidConfig(format!("report '{}' missing {kind}", report.label))
            })?;
            row.push(fmt(s.abias2));
            row.push(fmt(s.avar));
            row.push(fmt(s.aimse));
            row.push(fmt(s.mean_mspee));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-grid-point curve file for external plotting: a `# config:` provenance
/// line, then t, truth, and one mean-curve column per estimator.
pub fn write_curve_csv<W: Write>(
    report: &MonteCarloReport,
    run_config: &serde_json::Value,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "# config: {run_config}")?;
    let mut header = vec!["t".to_string(), "truth".to_string()];
    for s in &report.summaries {
        header.push(s.estimator.name().to_string());
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(&header)?;
    for (l, &t) in report.grid.iter().enumerate() {
        let mut row = vec![fmt(t), fmt(report.truth[l])];
        for s in &report.summaries {
            row.push(fmt(s.mean_curve[l]));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Bootstrap band file: t, estimate, lower, upper, significant.
pub fn write_band_csv<W: Write>(
    band: &BootstrapBand,
    run_config: &serde_json::Value,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "# config: {run_config}")?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "estimate", "lower", "upper", "significant"])?;
    for l in 0..band.grid.len() {
        wtr.write_record([
            fmt(band.grid[l]),
            fmt(band.estimate[l]),
            fmt(band.lower[l]),
            fmt(band.upper[l]),
            band.significant[l].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// JSON report bundle embedding the resolved run configuration.
pub fn write_report_json<W: Write>(
    reports: &[MonteCarloReport],
    run_config: &serde_json::Value,
    out: &mut W,
) -> Result<()> {
    let doc = serde_json::json!({
        "config": run_config,
        "reports": reports,
    });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Convenience path-based emitter used by the CLI.
pub fn emit_report(
    reports: &[MonteCarloReport],
    run_config: &serde_json::Value,
    format: &str,
    path: &Path,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    match format {
        "csv" => write_report_csv(reports, &mut file)?,
        "json" => write_report_json(reports, run_config, &mut file)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown report format '{other}' (expected csv or json)"
            )))
        }
    }
    Ok(())
}
