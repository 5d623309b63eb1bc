use std::io;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid arguments or violated preconditions.
    #[error("usage error: {0}")]
    Usage(String),
    /// Non-finite values or numeric breakdown.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Sample program syntax or semantic error with a 1-based source location.
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// A program refers to something the context cannot supply (missing target, image).
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed or incompatible file contents.
    #[error("load error: {0}")]
    Load(String),
    /// Training produced a non-finite loss; carries the last finite filter stack.
    #[error("training diverged at step {step}")]
    Diverged {
        step: usize,
        last_good: Box<crate::filter::FilterStack>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn load(msg: impl Into<String>) -> Self {
        Error::Load(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse { .. } | Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
