//! Config-driven runs of the forward solver, gradient check, optimizer,
//! continuation and parameter sweeps, with deterministic artifacts.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{replay, run, CliError, Command, Manifest};
pub use config::{load_config, parse_config, ConfigError, FieldSpec, RunConfig};
