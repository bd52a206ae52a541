use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the case harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration. Each entry names one problem.
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    /// Geometry that cannot be represented on the grid (bodies outside the
    /// domain, degenerate control volumes, coincident particles).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Field shapes that do not conform to the grid.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A solve diverged, failed to converge or produced non-finite values.
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        residuals: Vec<f64>,
    },

    /// An operation was called in a state that does not support it.
    #[error("state error: {0}")]
    State(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            message: msg.into(),
            residuals: Vec::new(),
        }
    }

    /// Same error with `context` prepended to its message.
    pub fn context(self, context: &str) -> Self {
        match self {
            Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{context}: {m}")).collect()),
            Error::Geometry(m) => Error::Geometry(format!("{context}: {m}")),
            Error::Shape(m) => Error::Shape(format!("{context}: {m}")),
            Error::Numerical { message, residuals } => Error::Numerical {
                message: format!("{context}: {message}"),
                residuals,
            },
            Error::State(m) => Error::State(format!("{context}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{context}: {e}"))),
            Error::Format(m) => Error::Format(format!("{context}: {m}")),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Geometry(_) | Error::Shape(_) | Error::Format(_) => 2,
            Error::Numerical { .. } => 3,
            Error::State(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
