use thiserror::Error;

/// Errors produced by the combitest library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data admit no meaningful test statistic (e.g. zero variance everywhere).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A numeric routine failed to converge or overflowed.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A rate-model assumption required by the requested analysis does not hold.
    #[error("assumption ({assumption}) violated: {detail}")]
    AssumptionViolated {
        assumption: &'static str,
        detail: String,
    },

    /// A configuration document could not be parsed.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// A configuration value violated a semantic constraint.
    #[error("config error at {path}: {message}")]
    ConfigValue { path: String, message: String },

    /// Too many replicates produced degenerate data for the run to be trusted.
    #[error("degenerate replicates exceeded 0.1% threshold: {degenerate} of {replicates}")]
    DegenerateThreshold { degenerate: u64, replicates: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config_value(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::ConfigValue {
            path: path.into(),
            message: msg.into(),
        }
    }
}
