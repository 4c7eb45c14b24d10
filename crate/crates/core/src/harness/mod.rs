//! Benchmark orchestration: program suites, noise factors, configuration,
//! exchange files for external execution and the mitigability report.

mod bench;
mod config;
mod files;
mod report;
mod suite;

use std::path::PathBuf;

use thiserror::Error;

pub use bench::{
    analyze, calibrate_stage, ideal_values, run_benchmark, run_suite, AnalysisOptions, BenchRun,
    Calibrated,
};
pub use config::{
    BenchConfig, CalibrationConfig, CalibrationSource, ExtrapolationConfig, NoiseFactorSource,
    OutputConfig, SuiteConfig, CONFIG_VERSION,
};
pub use files::{
    read_json, write_json, IngestedResults, Observable, ResultEntry, ResultsFile, ScheduleEntry,
    ScheduleFile, RESULTS_VERSION, SCHEDULE_VERSION,
};
pub use report::{
    BlockStatus, ConvergenceEntry, CycleBlock, DataSource, Mitigability, MitigabilityReport,
    OutputFormat, Provenance, ReportPoint, REPORT_VERSION,
};
pub use suite::{
    build_program_suite, default_label, noise_factor, ExperimentSpec, BASE_PERIOD, DEFAULT_CYCLES,
    DEFAULT_SHOTS, DEFAULT_STRETCHES,
};

use crate::calibration::CalibrationError;
use crate::device::DeviceError;
use crate::sim::SimError;

/// Failure of a harness stage.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("calibration stage: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("suite stage: {0}")]
    Suite(String),
    #[error("simulation stage, program `{label}`: {source}")]
    Simulation {
        label: String,
        #[source]
        source: SimError,
    },
    #[error("ingest: {0}")]
    Ingest(String),
    #[error("device model: {0}")]
    Device(#[from] DeviceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}
