//! Verification suites and empirical constant estimation on top of
//! `varlex-core`, with JSON and CSV reports.

pub mod cli;
pub mod config;
pub mod error;
pub mod families;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{ExperimentError, Result};
pub use report::{ExperimentReport, Status};
