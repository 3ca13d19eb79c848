use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cohort contains no observed deaths")]
    NoEvents,

    #[error("covariate `{name}` has zero variance")]
    DegenerateCovariate { name: String },

    #[error("partial likelihood diverged along covariate `{name}` (monotone likelihood)")]
    Divergence { name: String },

    #[error("publisher `{name}` has no matching articles")]
    NoArticles { name: String },

    #[error("all {replicates} replicates failed")]
    ExperimentFailed { replicates: usize },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Schema {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. } | Error::ExperimentFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
