//! Command-line front end for the `warped-harmonic` checks: configuration,
//! command runner, report files and the run manifest.

pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod runner;
