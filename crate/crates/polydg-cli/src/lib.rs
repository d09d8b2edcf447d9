//! Library backing the `polydg` command-line driver: TOML configuration
//! parsing with exhaustive validation, and the subcommand implementations.

pub mod commands;
pub mod config;
