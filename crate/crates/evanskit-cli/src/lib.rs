//! Stability scans over the registered systems: configuration, pipeline and report files.

pub mod config;
pub mod registry;
pub mod report;
pub mod scan;

pub use config::{Overrides, ScanConfig};
pub use registry::{build_system, list_systems};
pub use report::{emit_report, OutputPaths};
pub use scan::{run_scan, ScanReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("unknown system {0:?}")]
    UnknownSystem(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("output: {0}")]
    Io(String),
}
