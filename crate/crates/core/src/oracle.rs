//! Brute-force reference computations. Everything here materializes the full
//! Kronecker matrices and is meant for verification at small sizes only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kronlinalg::{dot, solve_spd, sym_eigen, DenseMatrix, LinalgError};
use crate::projmaint::ConstraintBatch;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
}

/// How the weight enters the projected matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `B = A (W^{1/2} ⊗ W^{1/2})`, i.e. `B_i = W^{1/2} A_i W^{1/2}`.
    Symmetric,
    /// `B = A (W ⊗ I)`, i.e. `B_i = A_i W`.
    Left,
}

/// `Bᵀ (B Bᵀ)⁻¹ B` with `B` formed explicitly from the weight.
pub fn exact_projection(constraints: &ConstraintBatch, w: &DenseMatrix, variant: Variant) -> Result<DenseMatrix, OracleError> {
    let n = constraints.n();
    let factor = match variant {
        Variant::Symmetric => {
            let half = sym_eigen(w)?.sqrt();
            half.kron(&half)
        }
        Variant::Left => w.transpose().kron(&DenseMatrix::identity(n)),
    };
    let b = constraints.matrix().matmul(&factor)?;
    projection_onto_rows(&b)
}

/// Symmetric-variant projection for `W = U diag(λ) Uᵀ`.
pub fn exact_projection_eigen(constraints: &ConstraintBatch, basis: &DenseMatrix, lam: &[f64]) -> Result<DenseMatrix, OracleError> {
    let d: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();
    let half = basis.scale_cols(&d).matmul(&basis.transpose())?;
    let b = constraints.matrix().matmul(&half.kron(&half))?;
    projection_onto_rows(&b)
}

/// `Bᵀ (B Bᵀ)⁻¹ B` for a full-row-rank `B`.
pub fn projection_onto_rows(b: &DenseMatrix) -> Result<DenseMatrix, OracleError> {
    let gram = b.matmul(&b.transpose())?;
    let x = solve_spd(&gram, b)?;
    let mut p = b.t_matmul(&x)?;
    p.symmetrize();
    Ok(p)
}

/// `G = A (U ⊗ U)` with the Kronecker factor materialized.
pub fn exact_rotated_constraints(constraints: &ConstraintBatch, basis: &DenseMatrix) -> Result<DenseMatrix, OracleError> {
    Ok(constraints.matrix().matmul(&basis.kron(basis))?)
}

/// `Gᵀ (G (Λ⊗Λ) Gᵀ)⁻¹ G` recomputed from scratch.
pub fn exact_inverse_hessian(g: &DenseMatrix, lam: &[f64]) -> Result<DenseMatrix, OracleError> {
    let ll = DenseMatrix::from_diag(lam).kron(&DenseMatrix::from_diag(lam));
    let gram = g.matmul(&ll)?.matmul(&g.transpose())?;
    let x = solve_spd(&gram, g)?;
    let mut m = g.t_matmul(&x)?;
    m.symmetrize();
    Ok(m)
}

/// `‖G h‖²`.
pub fn exact_norm(g: &DenseMatrix, h: &[f64]) -> Result<f64, OracleError> {
    Ok(g.matvec(h)?.iter().map(|v| v * v).sum())
}

/// `((g_jᵀ h)²)_{j ∈ Q}`.
pub fn exact_set_query(g: &DenseMatrix, h: &[f64], query: &[usize]) -> Result<Vec<f64>, OracleError> {
    if h.len() != g.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "exact_set_query",
            expected: format!("length {}", g.cols()),
            found: format!("length {}", h.len()),
        }
        .into());
    }
    query
        .iter()
        .map(|&j| {
            if j >= g.rows() {
                Err(OracleError::IndexOutOfRange { index: j, len: g.rows() })
            } else {
                Ok(dot(g.row(j), h).powi(2))
            }
        })
        .collect()
}
