//! Experiment orchestration for the `aim` command-line tool: configuration,
//! seeded parallel task runs, and sweep aggregation.

pub mod aggregate;
pub mod config;
pub mod tasks;
