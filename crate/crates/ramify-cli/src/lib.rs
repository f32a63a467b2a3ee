//! Library side of the `ramify` command line tool.

pub mod commands;
pub mod config;
pub mod expr;
pub mod plot;

use ramify::burgers::BurgersError;
use ramify::fixedpoint::FixedPointError;
use ramify::zring::ZRingError;
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for numeric aborts.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<expr::ExprError> for CliError {
    fn from(e: expr::ExprError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FixedPointError> for CliError {
    fn from(e: FixedPointError) -> Self {
        match e {
            FixedPointError::Config(_) | FixedPointError::ZRing(ZRingError::InvalidDatum(_)) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ZRingError> for CliError {
    fn from(e: ZRingError) -> Self {
        match e {
            ZRingError::InvalidDatum(_) => CliError::Config(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<BurgersError> for CliError {
    fn from(e: BurgersError) -> Self {
        match e {
            BurgersError::InitDependsOnT | BurgersError::NotASquare(_) | BurgersError::Ordering => {
                CliError::Config(e.to_string())
            }
            e => CliError::Numeric(e.to_string()),
        }
    }
}
