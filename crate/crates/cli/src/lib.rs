//! Scenario runner for the forward Kimura solver: config parsing, the
//! subcommand pipelines and their artifacts.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
