//! Batch front end for daemonic-ergotropy experiments: TOML configuration,
//! a rayon-backed executor for the ensemble engine, schema-checked CSV
//! output with a JSON run manifest, and the `daemonic` command line.

pub mod commands;
pub mod config;
pub mod error;
pub mod executor;
pub mod output;
pub mod presets;
pub mod random;
pub mod validate;

pub use config::{ConfigError, ExperimentConfig, Overrides};
pub use error::CliError;
pub use executor::RayonExecutor;
