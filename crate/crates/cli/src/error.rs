use std::fmt;

/// A failed command, classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, arguments, configuration values or incompatible inputs.
    Usage(String),
    /// Unreadable, unwritable or malformed files.
    Io(String),
    /// Numerically degenerate or out-of-domain data.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<pcstruct::Error> for CliError {
    fn from(e: pcstruct::Error) -> Self {
        use pcstruct::Error as E;
        let msg = e.to_string();
        match e {
            E::Argument(_) | E::DimensionMismatch { .. } | E::Encoding { .. } | E::Size(_) => CliError::Usage(msg),
            E::Parse { .. } | E::SizeMismatch { .. } | E::Io { .. } => CliError::Io(msg),
            E::Degenerate(_) | E::Domain(_) => CliError::Numeric(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
