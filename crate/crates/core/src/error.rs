use std::path::PathBuf;

use thiserror::Error;

use crate::stattests::AdfResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("series too short: need more than {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("singular regressor matrix ({0})")]
    Singular(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("date range mismatch: {0}")]
    DateMismatch(String),
    #[error("series still non-stationary after {d} differences (ADF p = {:.4})", .adf.p_value)]
    NonStationary { d: usize, adf: Box<AdfResult> },
    #[error("every candidate model failed to fit")]
    AllFitsFailed,
    #[error("document `{0}` has no tokens after cleaning")]
    EmptyDocument(String),
    #[error("document has no in-vocabulary tokens")]
    NoKnownTokens,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no sentiment label for record `{0}`")]
    MissingLabel(String),
    #[error("missing artifact {path}; run `signalcast {stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI: 1 for validation problems, 2 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ZeroVariance
            | Error::Singular(_)
            | Error::NonStationary { .. }
            | Error::AllFitsFailed => 2,
            _ => 1,
        }
    }
}
