use std::path::PathBuf;

/// Errors surfaced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An index (GoP, tile, layer, user) is outside the valid range.
    #[error("{what} index {index} out of range (limit {limit})")]
    Bounds {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration or asset data.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The trace can never deliver the requested number of bits.
    #[error("transmission of {remaining_bits} bits unreachable after t={at_s}s (channel rate is zero forever)")]
    Unreachable { remaining_bits: f64, at_s: f64 },

    /// The session already played its last GoP.
    #[error("session for user {user} is complete")]
    SessionComplete { user: usize },

    /// A malformed or out-of-order protocol request.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Short machine-readable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Bounds { .. } => "bounds",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Unreachable { .. } => "unreachable",
            Error::SessionComplete { .. } => "session_complete",
            Error::Protocol(_) => "protocol",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Csv(_) => "csv",
        }
    }
}
