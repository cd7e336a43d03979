//! Command-line front end for the Lévy-Attack library.

pub mod commands;
pub mod data_source;
pub mod dump;
pub mod sweep;

pub use commands::{run, CliError};
