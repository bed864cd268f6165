//! Experiment drivers behind the command-line harness. Every experiment is a
//! pure function of its config (including the seed) and returns a
//! serializable report; wall-clock timing is left to the caller so reports
//! stay byte-identical across reruns.

mod adaptive_exp;
mod bench;
mod complexity;
mod drift;
mod maint;
mod report;

use thiserror::Error;

pub use adaptive_exp::{
    run_adaptive_experiment, Adversary, AdaptiveExperimentConfig, AdaptiveReport, AdaptiveRunSummary, AdaptiveStep,
    EstimatorKind,
};
pub use bench::{
    ce_bench, dp_bench, dp_smoke, private_median_battery, verify_oracle, CeBenchConfig, CeBenchReport, DpBenchConfig,
    DpBenchReport, DpSmokeReport, MedianBatteryReport, OracleCheck, VerifyOracleConfig, VerifyOracleReport,
    ValueDistribution,
};
pub use complexity::{complexity_model, f_ac, weight_g, ComplexityConfig, ComplexityReport};
pub use drift::{gen_drift_sequence, DriftConfig, DriftPattern};
pub use maint::{run_maintenance_experiment, MaintExperimentConfig, MaintReport, MaintStep};
pub use report::{Format, Report};

use crate::adaptive::AdaptiveError;
use crate::dpcore::DpError;
use crate::kronlinalg::LinalgError;
use crate::oracle::OracleError;
use crate::projmaint::MaintError;
use crate::sketch::SketchError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Maint(#[from] MaintError),
    #[error(transparent)]
    Adaptive(#[from] AdaptiveError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Parses a TOML config; missing fields take their defaults.
pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, HarnessError> {
    toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
}
