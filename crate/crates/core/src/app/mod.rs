//! Configuration files, presets and the subcommand pipelines behind the CLI.

pub mod commands;
pub mod config;

pub use commands::{execute, run_subcommand, ResultTable, SUBCOMMANDS};
pub use config::{load_config, load_config_with, parse_config, ScenarioConfig, PRESETS};
