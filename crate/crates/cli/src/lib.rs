//! Reproducible driver: run configuration, commands and file formats.

pub mod args;
pub mod commands;
pub mod config;
pub mod trajectory_csv;

pub use config::RunConfig;
