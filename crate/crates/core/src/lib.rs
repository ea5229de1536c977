//! Measurement-error-corrected scalar-on-function linear regression using a
//! functional instrumental variable.
//!
//! The crate provides:
//! - a functional-data core (time grids, B-spline bases, basis scores),
//! - five estimators of the coefficient curve (Oracle, Naive, PW-2SLS,
//!   MULTI-2SLS, IV-SIMEX) with BIC selection of the basis dimension,
//! - a reproducible Monte Carlo simulation engine with the standard
//!   covariance structures and three measurement-error laws,
//! - nonparametric bootstrap confidence bands,
//! - CSV ingestion with outlier/day-averaging preprocessing for real
//!   functional data, and a CLI driving all of it.
//!
//! The numerical core (`grid`, `basis`, `linalg`, `linmod`, `metrics`) is
//! generic over the scalar type via [`scalar::Scalar`], defaulting to `f64`;
//! estimators and simulation run in `f64`.

pub mod basis;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod harness;
pub mod ingest;
pub mod linalg;
pub mod linmod;
pub mod metrics;
pub mod presets;
pub mod scalar;
pub mod simgen;

pub use basis::{build_bspline_basis, project_scores, reconstruct_coefficient, BasisSystem, ScoreMatrix};
pub use error::{Error, Result};
pub use estimators::{
    estimate_sigma_uu, fit_multi2sls, fit_naive, fit_oracle, fit_pw2sls, fit_simex,
    fit_simex_with_sigma, select_k_bic, EstimatorKind, FitResult, SimexConfig,
};
pub use grid::{integrate, FunctionalSample, TimeGrid};
pub use ingest::{
    assemble_dataset, load_long_csv, preprocess, CurveRole, JoinReport, LongRecord, LongRecords,
    LongSchema, OutcomeSchema, PreprocessRules, SubjectCurves,
};
pub use linmod::{cross_covariance, multiresponse_ols, nearest_psd, ols_fit, RegressionFit};
pub use harness::{
    benchmark_fit, bootstrap_ci, emit_report, fit_estimator, run_monte_carlo, BenchmarkResult,
    BootstrapBand, EstimatorSummary, FitOptions, MonteCarloReport,
};
pub use metrics::{abias2, aimse, avar, mspee, percent_difference, quantile_linear, CurveEnsemble};
pub use presets::{baseline, preset, PresetScenario, PRESET_NAMES};
pub use simgen::{
    build_correlation, generate_dataset, substream_rng, substream_seed, true_beta1, CovStructure,
    CovarianceSpec, Dataset, MeDistribution, ScenarioConfig,
};

/// Single-precision aliases for the generic numerical core.
pub type TimeGrid32 = grid::TimeGrid<f32>;
pub type FunctionalSample32 = grid::FunctionalSample<f32>;
pub type BasisSystem32 = basis::BasisSystem<f32>;
pub type RegressionFit32 = linmod::RegressionFit<f32>;
