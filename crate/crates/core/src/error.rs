use thiserror::Error;

/// Errors raised across the crate. `exit_code` maps them onto the CLI contract.
#[derive(Error, Debug)]
pub enum Error {
    #[error("negative weight {weight} in edge record {record}")]
    NegativeWeight { record: String, weight: f64 },

    #[error("non-finite weight in edge record {record}")]
    NonFiniteWeight { record: String },

    #[error("self-loop in edge record {record} (diagonal must be zero)")]
    SelfLoop { record: String },

    #[error("conflicting duplicate weights: {first} vs {second}")]
    ConflictingDuplicate { first: String, second: String },

    #[error("node index {index} out of range for graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid label `{label}` at {location} (expected `+` or `-`)")]
    InvalidLabel { location: String, label: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("enumeration bound exceeded: n*m = {0} > 20")]
    EnumerationBound(usize),

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("dynamics did not converge: {0}")]
    NonConvergence(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// 0 success, 1 validation, 2 runtime, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NegativeWeight { .. }
            | Error::NonFiniteWeight { .. }
            | Error::SelfLoop { .. }
            | Error::ConflictingDuplicate { .. }
            | Error::UnknownNode(_)
            | Error::Parse { .. }
            | Error::InvalidLabel { .. }
            | Error::InvalidParameter(_)
            | Error::Config { .. } => 1,
            Error::NonConvergence(_) => 3,
            _ => 2,
        }
    }
}
