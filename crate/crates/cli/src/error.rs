use std::fmt;

use oddsmith::dataset::DatasetError;
use oddsmith::featsel::FeatselError;
use oddsmith::metrics::MetricsError;
use oddsmith::models::ModelError;
use oddsmith::odds::OddsError;

/// Failure of a subcommand, split by who has to fix it.
#[derive(Debug)]
pub enum CliError {
    /// Bad input file, flag or config (exit code 2).
    Input(String),
    /// The inputs were accepted but the pipeline failed (exit code 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InsufficientData(_) | DatasetError::NoPriorMatches(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Dataset(d) => d.into(),
            ModelError::VersionMismatch { .. } | ModelError::Json(_) => CliError::Input(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<FeatselError> for CliError {
    fn from(e: FeatselError) -> Self {
        match e {
            FeatselError::Model(m) => m.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OddsError> for CliError {
    fn from(e: OddsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}
