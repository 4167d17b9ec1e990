//! Command-line front end: configuration, reports, sweeps and verification.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod sweep;
pub mod verify;

pub use cli::{run, Cli};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
