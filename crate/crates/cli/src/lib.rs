//! Library half of the `magopt` binary: config schema, artifact formats,
//! and command implementations, exposed so tests can drive the same code
//! paths the binary does.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
