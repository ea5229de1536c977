use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid basis: K = {k} must be at least the spline order {order}")]
    InvalidBasis { k: usize, order: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: sample grid differs from the grid the basis was built on")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("rank-deficient design: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("underdetermined system: {rows} rows for {cols} columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("insufficient data: need at least {need} rows, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("asymmetric input: max |S - S^T| entry {max_dev} exceeds tolerance {tol}")]
    AsymmetricInput { max_dev: f64, tol: f64 },

    #[error("invalid correlation: rho = {0} must lie in [0, 1)")]
    InvalidCorrelation(f64),

    #[error("weak instrument: first stage rank-deficient at t = {t}")]
    WeakInstrument { t: f64 },

    #[error("ratio estimator degenerate: |mean W(t)| < 1e-12 at t = {t}")]
    RatioDegenerate { t: f64 },

    #[error("non-positive weight at row {0}")]
    NonPositiveWeight(usize),

    #[error("fit failed for K = {k}: {source}")]
    KAnnotated {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{n_bad} malformed rows (limit {limit}); first: line {first_line}: {first_msg}")]
    MalformedRows {
        n_bad: usize,
        limit: usize,
        first_line: u64,
        first_msg: String,
    },

    #[error("empty cohort after preprocessing")]
    EmptyCohort,

    #[error("bootstrap resample failed after {retries} retries: {source}")]
    BootstrapRetries {
        retries: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
