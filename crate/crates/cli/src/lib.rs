//! Edge-list ingestion, experiment configuration and the subcommands of
//! the `hinrec` tool.

pub mod commands;
pub mod config;
pub mod ingest;
