//! Config ingestion and output formatting for the `imcsim` binary.

pub mod config;
pub mod output;
