//! Reductions that turn estimators built for oblivious inputs into ones that
//! stay accurate when inputs are chosen adaptively from earlier outputs.
//!
//! [`AdaptiveWrapper`] runs `L` independently seeded copies of an oblivious
//! estimator, and at each step answers with the private median of `q`
//! subsampled, grid-rounded copy outputs.

mod estimators;
mod wrapper;

use thiserror::Error;

use crate::dpcore::DpError;
use crate::kronlinalg::LinalgError;
use crate::projmaint::MaintError;
use crate::sketch::SketchError;

pub use estimators::{ExactNormEstimator, ObliviousEstimator, ProjectionNormEstimator, SketchedNormEstimator};
pub use wrapper::{
    norm_copies, norm_subsample_size, setquery_copies, AdaptiveWrapper, Mode, StepRecord, WrapperCounters,
    WrapperParams, C_L_SET, C_Q, EPS_PM,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptiveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("query set has {found} indices, expected {expected}")]
    CardinalityMismatch { expected: usize, found: usize },
    #[error("operation requires {0} mode")]
    WrongMode(&'static str),
    #[error("estimator queried before any update")]
    NoInput,
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Maint(#[from] MaintError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
