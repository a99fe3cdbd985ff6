//! Simulation harness for the concurrent-learning adaptive observer: config
//! parsing, the fixed-step run loop on the two-link arm, and deterministic
//! CSV/metadata output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::RunConfig;
pub use runner::{run, RunLog};
