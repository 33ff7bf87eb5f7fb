//! File formats, configuration, a parallel executor and the `gdtune`
//! command line on top of `gdtune-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod format;
pub mod load;
pub mod report;

pub use error::{CliError, Result};
