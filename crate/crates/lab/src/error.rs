use caloric::CaloricError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },

    #[error("unknown key `{key}`")]
    UnknownKey { key: String },

    #[error("key `{key}` given twice")]
    DuplicateKey { key: String },

    #[error("unknown experiment `{name}` (see `caloric-lab list`)")]
    UnknownExperiment { name: String },

    #[error("{key} = {value}: {reason}")]
    BadValue { key: String, value: String, reason: String },

    #[error("{key} out of range: {reason}")]
    OutOfRange { key: String, reason: String },

    #[error("experiment `{experiment}` has no refinable residual")]
    NotRefinable { experiment: String },

    #[error("a convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),

    #[error("metric `{metric}` of `{experiment}` is not finite")]
    NonFiniteMetric { experiment: String, metric: String },

    #[error("{experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: CaloricError,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
