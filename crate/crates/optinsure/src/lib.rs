//! Monte Carlo validation, configuration, CSV output and the command-line
//! front end for the `optinsure-core` solvers.

pub mod cli;
pub mod config;
pub mod montecarlo;
pub mod report;
