//! Errors and their process exit codes.

use std::fmt;

use sparse_pcm::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    Usage(String),
    /// Every benchmark cell failed.
    AllCellsFailed,
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::AllCellsFailed => f.write_str("every benchmark cell failed"),
            CliError::Core(Error::DenseLimit { n, limit }) => write!(
                f,
                "dense output for n = {n} exceeds the limit of {limit}; \
                 pass --sparse-output (or raise --dense-limit)"
            ),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_PARSE,
            CliError::AllCellsFailed => EXIT_SOLVER,
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::InvalidInput(_)
                | Error::WrongMode { .. }
                | Error::NonPositive { .. }
                | Error::EmptyObservations => EXIT_PARSE,
                Error::DenseLimit { .. } => EXIT_RESOURCE,
                Error::Overflow { .. }
                | Error::EigenNotConverged { .. }
                | Error::CgNotConverged { .. }
                | Error::MleDoesNotExist { .. }
                | Error::Diverged { .. }
                | Error::BtlNotConverged { .. }
                | Error::NonFiniteLoss { .. }
                | Error::DegenerateRanking(_) => EXIT_SOLVER,
            },
        }
    }
}
