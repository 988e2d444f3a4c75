//! Command-line front end for `dfmud-core`: TOML run configuration, CSV and
//! JSON artifacts, a rayon trial executor and the experiment drivers behind
//! the `dfmud` binary.

pub mod commands;
pub mod config;
pub mod exec;
pub mod output;

pub use exec::Parallel;
