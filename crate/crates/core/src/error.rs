use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// A trajectory left the finite range or crossed the sup-norm guard.
    #[error("numerical blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },
    /// A study refused to run because its regularity prerequisite failed.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 1 blow-up, 2 misuse, 3 I/O or malformed files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } => 1,
            Error::Usage(_) | Error::Domain(_) | Error::Hypothesis(_) => 2,
            Error::Format(_) | Error::Io(_) => 3,
        }
    }
}
