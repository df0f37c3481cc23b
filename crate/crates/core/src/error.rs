use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed line {0}")]
    MalformedLine(usize),

    #[error("non-finite value on line {0}")]
    NonFinite(usize),

    #[error("pair file holds fewer than 2 rows")]
    EmptyFile,

    #[error("meta file references missing pair `{0}`")]
    MetaMismatch(String),

    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error("degenerate range: input is constant")]
    DegenerateRange,

    #[error("only {0} rows survive density filtering (need at least 10)")]
    TooFewPointsRemain(usize),

    #[error("least-squares system is rank deficient")]
    SingularSystem,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid model spec `{0}`")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("both errors are zero")]
    BothZero,

    #[error("integrand is not integrable: derivative vanishes near c = {0}")]
    NonIntegrable(f64),

    #[error("conditioning cell holds {0} points (need at least 5)")]
    InsufficientSamples(usize),

    #[error("more than half of the consecutive spacings are zero")]
    DegenerateSpacing,

    #[error("sum of weights is zero")]
    ZeroWeight,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("independence postulate violated: covariance {0:e}")]
    PostulateViolated(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numbers themselves rather than by
    /// malformed input files.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateRange
                | Error::TooFewPointsRemain(_)
                | Error::SingularSystem
                | Error::BothZero
                | Error::NonIntegrable(_)
                | Error::InsufficientSamples(_)
                | Error::DegenerateSpacing
                | Error::ZeroWeight
                | Error::PostulateViolated(_)
        )
    }
}
