//! Std companion to [`s3t_core`]: canonical JSON, snapshot and event-log
//! persistence, parallel Monte Carlo, and the `s3t` command line.

pub mod canonical;
pub mod cli;
pub mod registry;
pub mod runner;

pub use s3t_core;
