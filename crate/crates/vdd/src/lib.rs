//! File formats, fixtures, batch runners and the command-line driver around `vdd_core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod samples;
pub mod trace;

pub use error::{Error, Result};
