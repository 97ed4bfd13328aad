use thiserror::Error;

/// Errors raised by problems, drivers, metrics and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Hyperparameter or experiment configuration rejected. `path` names the
    /// offending field (e.g. `hyperparams.Q`).
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A client produced a non-finite iterate. Runs abort instead of clamping.
    #[error("numerical abort: client {client} produced a non-finite value at iteration {iter}")]
    NumericalAbort { client: usize, iter: usize },

    /// A client step panicked inside a parallel round.
    #[error("client {client} panicked: {message}")]
    ClientPanic { client: usize, message: String },

    /// An iterative metric solver hit its iteration cap.
    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::NumericalAbort { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
