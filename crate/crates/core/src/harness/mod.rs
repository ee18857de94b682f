//! Batch experiment runner: configuration, CSV output and constant pinning.

pub mod axioms;
pub mod config;
pub mod csv;
pub mod pin;
pub mod run;

pub use config::{ClassifyMode, ExperimentConfig, Task};
pub use run::{execute, run, Payload, RunRecord};
pub use pin::{pin_constants, Constants};
