//! Dense kernels for Kronecker-structured linear algebra.
//!
//! One vectorization convention is used throughout the crate: `vec` stacks
//! columns, so entry `(r, c)` of an `p x q` matrix sits at `r + c * p`. Under
//! this convention `(A ⊗ B) vec(X) = vec(B X Aᵀ)`, and the Kronecker index of
//! the pair `(i, j)` (with `i` indexing the left factor) is `i * n + j`.

mod eigen;
mod kron;
mod matrix;
mod solve;

use thiserror::Error;

pub use eigen::{sym_eigen, EigenWeight, EIG_CLAMP_TOL, SYMMETRY_TOL};
pub use kron::{kron_apply, kron_diag, kron_index, kron_pair};
pub use matrix::{dot, norm2, DenseMatrix};
pub use solve::{condition_number, inverse_guarded, solve_spd, woodbury_update, COND_BOUND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("{0}: non-finite entry")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("{op}: matrix is singular or ill-conditioned (condition number {cond:e})")]
    IllConditioned { op: &'static str, cond: f64 },
}
