//! File formats, configuration, and the command implementations behind the
//! `vgo` binary. Exposed as a library so integration tests can drive the
//! commands in-process.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;

pub use error::CliError;
