use std::fmt;

/// Coarse error category, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Capacity,
    Solver,
    Io,
    Infeasible,
    Domain,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Capacity => 3,
            ErrorCategory::Solver => 4,
            ErrorCategory::Io => 5,
            ErrorCategory::Infeasible => 6,
            ErrorCategory::Domain => 7,
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Capacity => "capacity",
            ErrorCategory::Solver => "solver",
            ErrorCategory::Io => "io",
            ErrorCategory::Infeasible => "infeasible",
            ErrorCategory::Domain => "domain",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("capacity exceeded: {what} = {size} > ceiling {ceiling}")]
    Capacity {
        what: &'static str,
        size: u128,
        ceiling: u128,
    },

    #[error("infeasible action: {0}")]
    InfeasibleAction(String),

    #[error("solver did not converge after {sweeps} sweeps (last change {last_change:e})")]
    IterationLimit { sweeps: usize, last_change: f64 },

    #[error("linear program infeasible: {0}")]
    InfeasibleProgram(String),

    #[error("missing oracle value: {0}")]
    MissingOracle(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } | Error::Json { .. } => ErrorCategory::Config,
            Error::Capacity { .. } => ErrorCategory::Capacity,
            Error::IterationLimit { .. } | Error::InfeasibleAction(_) => ErrorCategory::Solver,
            Error::InfeasibleProgram(_) | Error::MissingOracle(_) => ErrorCategory::Infeasible,
            Error::Domain(_) => ErrorCategory::Domain,
            Error::Io { .. } => ErrorCategory::Io,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
