use thiserror::Error;

/// Errors raised by the simulator and the sweep runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid cutoff {0}: at least two Fock levels are required")]
    InvalidCutoff(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("cutoff {cutoff} is too small: tail mass {tail_mass:.3e} exceeds limit {limit:.1e}")]
    Truncation {
        cutoff: usize,
        tail_mass: f64,
        limit: f64,
    },

    #[error("invalid state specification: {0}")]
    InvalidSpec(String),

    #[error("input state carries no photons")]
    NoPhoton,

    #[error("success probability {p_success:.3e} is too small to condition on")]
    DegenerateSuccess { p_success: f64 },

    #[error("target probability {target} is unreachable; achievable maximum is {max}")]
    UnreachableTarget { target: f64, max: f64 },

    #[error("success probability is not monotone in t on the searched bracket (near t = {t})")]
    Bracketing { t: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line runner.
    ///
    /// Configuration and validation problems map to 1, numerical and
    /// truncation failures to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::InvalidSpec(_)
            | Error::InvalidArgument(_)
            | Error::InvalidCutoff(_)
            | Error::Io(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: &str, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
