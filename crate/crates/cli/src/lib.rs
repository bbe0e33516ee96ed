//! Command-line front end: configuration, commands and the built-in figure runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
