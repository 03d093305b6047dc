use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(mntc_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<mntc_core::Error> for CliError {
    fn from(e: mntc_core::Error) -> Self {
        use mntc_core::Error::*;
        match e {
            InvalidParams(_) | NoResonance { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}
