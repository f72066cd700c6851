//! Configuration, persistence and command implementations behind the `rydberg` binary.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod records;
pub mod runner;
pub mod tools;
