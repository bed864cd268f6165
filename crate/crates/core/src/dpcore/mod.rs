//! Differential-privacy primitives: the signed geometric output grid,
//! multiplicative rounding onto it, a private median, and budget accounting.

mod accountant;
mod grid;
mod median;

use thiserror::Error;

pub use accountant::{advanced_composition, amplification, simple_composition, PrivacyBudget};
pub use grid::SignedGeometricGrid;
pub use median::{gamma_bound, median_utilities, private_median, private_median_with_rng, rank_error, C_GAMMA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value {0} is outside the grid range")]
    OutOfRange(f64),
    #[error("value {0} is not a grid point")]
    OffGrid(f64),
    #[error("private median of an empty set")]
    Empty,
}
