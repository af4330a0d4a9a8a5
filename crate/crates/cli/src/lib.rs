//! Command-line front end: `test`, `simulate`, `plot`, `advise`, `generate`.

pub mod advise;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod results;

pub use error::{CliError, Result};
