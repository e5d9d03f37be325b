// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pcwqed_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("no qualifying dip in the ensemble spectrum to set the g2 detuning")]
    NoDip,
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 when too many
    /// samples failed, 4 when there is no reflected light, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use pcwqed_core::Error as E;
        match self {
            Self::Config(_) | Self::Core(E::InvalidRequest(_)) => 2,
            Self::Core(E::TooManyFailures { .. }) => 3,
            Self::Core(E::ReflectionTooWeak { .. }) => 4,
            _ => 1,
        }
    }
}
