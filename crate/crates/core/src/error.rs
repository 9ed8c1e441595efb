use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exact BCP requires pairwise distinct points ({0} appears more than once); use the Monte Carlo estimator for tied data")]
    DistinctPointsRequired(f64),

    #[error("size mismatch: {points} points but {alphas} Dirichlet parameters")]
    SizeMismatch { points: usize, alphas: usize },

    #[error("bound undefined: maximum point {max} does not exceed threshold {mu}")]
    BoundUndefined { max: f64, mu: f64 },

    #[error("infinite bonus: F(mu) = 1 at mu = {0}, no fixed bonus can satisfy the condition")]
    InfiniteBonus(f64),

    #[error("degenerate kinf curve: threshold {mu} does not exceed the model mean {mean}")]
    DegenerateCurve { mu: f64, mean: f64 },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
