use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("row {row}: field `{field}` = {value} outside its level set {allowed}")]
    InvalidCode {
        row: usize,
        field: &'static str,
        value: String,
        allowed: &'static str,
    },

    #[error("plot {plot_id}: {message}")]
    InvalidSeries { plot_id: u64, message: String },

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("knots must be strictly increasing (violation at index {index})")]
    UnsortedKnots { index: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("out of coverage{}: weeks {weeks:?}", plot_suffix(*plot_id))]
    OutOfCoverage { plot_id: Option<u64>, weeks: Vec<i64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "coordinate descent did not converge at lambda {lambda} after {sweeps} sweeps (kkt residual {kkt_residual:e})"
    )]
    NotConverged {
        lambda: f64,
        sweeps: usize,
        kkt_residual: f64,
        beta0: f64,
        beta: Vec<f64>,
    },

    #[error("singular penalized system at smooth `{term}`")]
    Singular { term: String },

    #[error("fold {fold}, lambda {lambda}: {source}")]
    Fold {
        fold: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("layout mismatch, unmatched columns: {0:?}")]
    Layout(Vec<String>),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn plot_suffix(plot_id: Option<u64>) -> String {
    plot_id.map(|p| format!(" for plot {p}")).unwrap_or_default()
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::Singular { .. } => true,
            Error::Fold { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
