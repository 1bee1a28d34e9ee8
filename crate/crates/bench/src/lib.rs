//! Monte-Carlo benchmark harness for the filters in `nano_filter`.
//!
//! A [`BenchConfig`] names a benchmark system, a noise case and a filter list.
//! [`run_benchmark`] simulates one trajectory per seed, runs every filter on it,
//! and aggregates RMSE, iteration counts and per-step wall time; [`emit_report`]
//! writes the results as CSV and JSON.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;
pub mod stats;

pub use config::BenchConfig;
pub use error::{BenchError, Result};
pub use harness::{rmse, run_benchmark, run_trial, run_trial_seed, BenchSummary, TrialResult};
pub use report::emit_report;
