//! Configuration parsing and subcommands of the `hsto` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{parse_config, ConfigFile};
pub use error::{CliError, CliResult};
