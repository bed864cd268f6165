use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LinalgError};

/// Allowed asymmetry (scaled by `max(1, max|w_ij|)`) for symmetric inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIG_CLAMP_TOL, 0)` are clamped to zero; below that the
/// input is rejected as not PSD.
pub const EIG_CLAMP_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// A PSD weight `W = U diag(λ) Uᵀ` held through its eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenWeight {
    basis: DenseMatrix,
    eigvals: Vec<f64>,
}

impl EigenWeight {
    pub fn new(basis: DenseMatrix, eigvals: Vec<f64>) -> Result<Self, LinalgError> {
        let n = eigvals.len();
        if basis.shape() != (n, n) {
            return Err(LinalgError::DimensionMismatch {
                op: "EigenWeight::new",
                expected: format!("{n}x{n} basis"),
                found: format!("{:?}", basis.shape()),
            });
        }
        if eigvals.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("EigenWeight::new"));
        }
        if let Some(&bad) = eigvals.iter().find(|&&v| v < 0.0) {
            return Err(LinalgError::NotPsd(bad));
        }
        let gram = basis.t_matmul(&basis)?;
        let dev = gram.sub(&DenseMatrix::identity(n))?.max_abs();
        if dev > ORTHONORMAL_TOL {
            return Err(LinalgError::IllConditioned { op: "EigenWeight::new (basis not orthonormal)", cond: dev });
        }
        Ok(Self { basis, eigvals })
    }

    /// Same basis, new spectrum. Negative or non-finite values are rejected.
    pub fn with_eigvals(&self, eigvals: Vec<f64>) -> Result<Self, LinalgError> {
        if eigvals.len() != self.eigvals.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "EigenWeight::with_eigvals",
                expected: format!("{} eigenvalues", self.eigvals.len()),
                found: format!("{}", eigvals.len()),
            });
        }
        if eigvals.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("EigenWeight::with_eigvals"));
        }
        if let Some(&bad) = eigvals.iter().find(|&&v| v < 0.0) {
            return Err(LinalgError::NotPsd(bad));
        }
        Ok(Self { basis: self.basis.clone(), eigvals })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d: Vec<f64> = self.eigvals.iter().map(|&l| f(l)).collect();
        let ud = self.basis.scale_cols(&d);
        ud.matmul(&self.basis.transpose()).expect("square factors")
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn sqrt(&self) -> DenseMatrix {
        self.reconstruct_with(f64::sqrt)
    }
}

/// Symmetric eigendecomposition of a PSD matrix with eigenvalues sorted in
/// nonincreasing order.
pub fn sym_eigen(w: &DenseMatrix) -> Result<EigenWeight, LinalgError> {
    if !w.is_square() {
        return Err(LinalgError::DimensionMismatch {
            op: "sym_eigen",
            expected: "square matrix".into(),
            found: format!("{:?}", w.shape()),
        });
    }
    if !w.is_finite() {
        return Err(LinalgError::NonFinite("sym_eigen"));
    }
    let scale = w.max_abs().max(1.0);
    let asym = w.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let n = w.rows();
    let mut sym = w.clone();
    sym.symmetrize();
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut eigvals = Vec::with_capacity(n);
    for &k in &order {
        let v = eig.eigenvalues[k];
        if v < -EIG_CLAMP_TOL * scale {
            return Err(LinalgError::NotPsd(v));
        }
        eigvals.push(v.max(0.0));
    }
    let basis = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    EigenWeight::new(basis, eigvals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_matrix, rng_from_seed};

    #[test]
    fn identity_spectrum() {
        let e = sym_eigen(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(e.eigvals(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted() {
        let e = sym_eigen(&DenseMatrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.eigvals(), &[4.0, 1.0]);
    }

    #[test]
    fn random_psd_reconstructs() {
        let mut rng = rng_from_seed(11);
        let x = random_matrix(&mut rng, 6, 4);
        let w = x.matmul(&x.transpose()).unwrap();
        let e = sym_eigen(&w).unwrap();
        let err = e.reconstruct().sub(&w).unwrap().frobenius_norm();
        assert!(err <= 1e-9 * w.frobenius_norm(), "err {err}");
        assert!(e.eigvals().windows(2).all(|p| p[0] >= p[1]));
        // rank 4 in dimension 6: the two trailing values were clamped to zero
        assert!(e.eigvals()[4] >= 0.0 && e.eigvals()[4] < 1e-10 * 36.0);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&a), Err(LinalgError::NotSymmetric(_))));
        let b = DenseMatrix::from_diag(&[1.0, -1e-3]);
        assert!(matches!(sym_eigen(&b), Err(LinalgError::NotPsd(_))));
        let c = DenseMatrix::from_diag(&[1.0, -1e-12]);
        assert_eq!(sym_eigen(&c).unwrap().eigvals(), &[1.0, 0.0]);
    }
}
