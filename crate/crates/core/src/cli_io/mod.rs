//! Configuration, run orchestration, persistence and sweeps.

pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use config::{RunConfig, SCHEMA_ID};
pub use runner::{resume, run, RunSummary, Simulation, StopReason};
