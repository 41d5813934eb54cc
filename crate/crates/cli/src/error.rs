use rkhs_radon::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, bad config or unreadable input. Exit code 2.
    #[error("{0}")]
    Input(String),

    /// Raised by the library. Exit code 1 for numerical breakdowns, 2 for
    /// rejected inputs.
    #[error(transparent)]
    Library(#[from] rkhs_radon::Error),

    /// Writing results failed. Exit code 1.
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Library(e) => match e {
                Error::Singular { .. }
                | Error::LinearlyDependent { .. }
                | Error::NotPsd { .. }
                | Error::NoConvergence { .. }
                | Error::Serialization(_) => 1,
                _ => 2,
            },
            CliError::Output { .. } => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
