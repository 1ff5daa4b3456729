//! Seeded synthetic benchmarks for the detector.
//!
//! A [`Benchmark`] holds a simulated reference scan, an evaluation session
//! (new power-cycle bias plus its calibration) and reproducible frame
//! suites. [`experiments::run`] evaluates one protocol on it and
//! [`report::write_report`] writes the aggregate and per-frame CSV files.

pub mod baseline;
pub mod bench;
pub mod config;
pub mod experiments;
pub mod metrics;
pub mod report;

pub use bench::{Benchmark, EvalFrame};
pub use config::EvalConfig;
pub use experiments::{run, EvalReport, Experiment};
pub use metrics::{ConditionRow, FrameOutcome};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Core(#[from] tofprox_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Builds the benchmark and runs one experiment.
pub fn run_experiment(experiment: Experiment, config: &EvalConfig) -> Result<EvalReport> {
    let bench = Benchmark::build(config)?;
    run(experiment, &bench)
}
