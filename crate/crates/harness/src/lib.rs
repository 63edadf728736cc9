//! Experiment harness around the `cachelab` library: configuration types,
//! the CSV results format, and the command implementations backing the
//! `cachelab` binary. Split out as a library so integration tests can drive
//! full experiments without shelling out.

pub mod commands;
pub mod config;
pub mod output;
