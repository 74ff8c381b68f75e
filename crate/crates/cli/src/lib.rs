//! Configuration, report and subcommand plumbing behind the `hk` binary.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use error::CliError;
