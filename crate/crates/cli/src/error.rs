use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, flags or input files.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Core(#[from] qspec::Error),

    /// The fit stopped without meeting its convergence tests.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(qspec::Error::NotCrossed { .. }) => 3,
            CliError::Core(qspec::Error::IllConditioned(_)) | CliError::NotConverged(_) => 4,
            CliError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}
