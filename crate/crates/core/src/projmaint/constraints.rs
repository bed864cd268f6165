use serde::{Deserialize, Serialize};

use super::MaintError;
use crate::kronlinalg::{DenseMatrix, LinalgError};

/// `m` constraint matrices `A_i ∈ R^{n×n}` stored as the rows `vec(A_i)ᵀ` of an
/// `m x n²` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBatch {
    n: usize,
    rows: DenseMatrix,
}

const RANK_TOL: f64 = 1e-10;

impl ConstraintBatch {
    /// Builds the batch, rejecting linearly dependent constraints.
    pub fn new(mats: &[DenseMatrix]) -> Result<Self, MaintError> {
        let first = mats.first().ok_or_else(|| MaintError::InvalidParameter("at least one constraint required".into()))?;
        let n = first.rows();
        let mut data = Vec::with_capacity(mats.len() * n * n);
        for a in mats {
            if a.shape() != (n, n) {
                return Err(LinalgError::DimensionMismatch {
                    op: "ConstraintBatch::new",
                    expected: format!("{n}x{n}"),
                    found: format!("{:?}", a.shape()),
                }
                .into());
            }
            data.extend(a.vec());
        }
        let rows = DenseMatrix::from_row_major(mats.len(), n * n, data)?;
        Self::from_vectorized(n, rows)
    }

    /// Builds the batch from already vectorized rows (`m x n²`).
    pub fn from_vectorized(n: usize, rows: DenseMatrix) -> Result<Self, MaintError> {
        if rows.cols() != n * n {
            return Err(LinalgError::DimensionMismatch {
                op: "ConstraintBatch::from_vectorized",
                expected: format!("{} columns", n * n),
                found: format!("{}", rows.cols()),
            }
            .into());
        }
        let m = rows.rows();
        if m == 0 || m > n * n {
            return Err(MaintError::RankDeficient { m, rank: m.min(n * n) });
        }
        let rank = numerical_rank(&rows);
        if rank < m {
            return Err(MaintError::RankDeficient { m, rank });
        }
        Ok(Self { n, rows })
    }

    pub fn m(&self) -> usize {
        self.rows.rows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `m x n²` matrix of vectorized constraints.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.rows
    }

    /// Constraint `i` reshaped back to `n x n`.
    pub fn constraint(&self, i: usize) -> DenseMatrix {
        DenseMatrix::unvec(self.n, self.n, self.rows.row(i)).expect("row has n² entries")
    }
}

/// Rank by Householder QR with column pivoting on the transposed rows.
fn numerical_rank(rows: &DenseMatrix) -> usize {
    let qr = rows.transpose().to_nalgebra().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let lead = diag.first().copied().unwrap_or(0.0);
    if lead == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > RANK_TOL * lead).count()
}
