//! File formats, configuration and the command-line pipeline around `werner-core`.
//!
//! Every output embeds the SHA-256 of the canonical run configuration and
//! the seed; `verify` re-derives the hash and checks each file against it.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod lock;

pub use config::RunConfig;
pub use error::CliError;
