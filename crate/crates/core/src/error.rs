use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    /// `row` is the 1-based data row (the header is not counted).
    #[error("row {row}: {message}")]
    InvalidRow { row: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("z not present in dataset")]
    ZNotPresent,

    #[error("revealed and stated samples disagree on the presence of a z column")]
    ZColumnMismatch,

    #[error("stated probability dimension {0} unsupported (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("need at least {needed} observations, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("sample has zero variance; use count densities for discrete stated probabilities")]
    ZeroVariance,

    #[error("zero total kernel weight at query point")]
    ZeroKernelWeight,

    #[error("empty subsample for x={x}, z={z:?}")]
    EmptySubsample { x: i64, z: Option<i64> },

    #[error("density representations do not match: {0}")]
    RepresentationMismatch(String),

    #[error("no retained z cell for x={0}")]
    NoRetainedZ(i64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate conditional support: {0}")]
    DegenerateSupport(String),

    #[error("all {0} query points had zero kernel weight")]
    AllQueriesSkipped(usize),

    #[error("bootstrap replicate {replicate} emptied a retained cell in {attempts} attempts")]
    BootstrapExhausted { replicate: usize, attempts: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn row(row: usize, message: impl Into<String>) -> Self {
        Error::InvalidRow {
            row,
            message: message.into(),
        }
    }

    /// True for failures caused by the filesystem rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::MissingColumn(_) => "missing_column",
            Error::InvalidRow { .. } => "invalid_row",
            Error::EmptyDataset => "empty_dataset",
            Error::ZNotPresent => "z_not_present",
            Error::ZColumnMismatch => "z_column_mismatch",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::ZeroVariance => "zero_variance",
            Error::ZeroKernelWeight => "zero_kernel_weight",
            Error::EmptySubsample { .. } => "empty_subsample",
            Error::RepresentationMismatch(_) => "representation_mismatch",
            Error::NoRetainedZ(_) => "no_retained_z",
            Error::InvalidConfig(_) => "invalid_config",
            Error::DegenerateSupport(_) => "degenerate_support",
            Error::AllQueriesSkipped(_) => "all_queries_skipped",
            Error::BootstrapExhausted { .. } => "bootstrap_exhausted",
            Error::Domain(_) => "domain",
            Error::Json(_) => "json",
        }
    }

    /// Input problems (unreadable files, malformed tables) as opposed to
    /// failures of the estimation itself.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Csv(_) | Error::MissingColumn(_) | Error::InvalidRow { .. } | Error::Json(_)
        )
    }
}
