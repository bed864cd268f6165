use serde::{Deserialize, Serialize};

use super::{ConstraintBatch, Counters, MaintConfig};
use crate::kronlinalg::DenseMatrix;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Resumable state of a [`super::MaintainedProjection`]. `M`, `Q`, `P` and
/// the pool are derived data and are rebuilt on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub config: MaintConfig,
    pub constraints: ConstraintBatch,
    pub basis: DenseMatrix,
    pub lam: Vec<f64>,
    pub lam_tilde: Vec<f64>,
    pub eig_floor: f64,
    pub pool_generation: u64,
    pub cursor: usize,
    pub rank_since_build: usize,
    pub updates_since_build: usize,
    pub counters: Counters,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
