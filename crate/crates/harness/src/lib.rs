//! Measurement harness: configuration, benchmark runs with quality and
//! fidelity reports, policy sweeps and overhead measurements.

pub mod config;
pub mod report;
pub mod runner;
pub mod stress;

pub use config::{Format, RunConfig};
pub use report::{CsvRow, OverheadRow, QualityReport, SelfCheck};
pub use runner::{cli_overhead, cli_run, cli_sweep, emit_reports, list_benchmarks, Harness, Measured, VERSION};
