//! File formats, sweep orchestration, analysis outputs, figures and the
//! command-line interface around `sweetspot-core`.

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod verify;

pub use error::{LabError, Result};
