// SPDX-License-Identifier: Apache-2.0

//! Configuration, commands and file formats behind the `pcwqed` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_analyze, cmd_g2, cmd_spectrum, cmd_sweep, Runtime};
pub use config::RunConfig;
pub use error::CliError;
