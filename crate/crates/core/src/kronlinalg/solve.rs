use super::{DenseMatrix, LinalgError, SYMMETRY_TOL};

/// Condition-number guard shared by every solve in the crate.
pub const COND_BOUND: f64 = 1e12;

/// 2-norm condition number from the singular values (`inf` when singular).
pub fn condition_number(a: &DenseMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 1.0;
    }
    let sv = a.to_nalgebra().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn require_square(a: &DenseMatrix, op: &'static str) -> Result<(), LinalgError> {
    if a.is_square() {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { op, expected: "square matrix".into(), found: format!("{:?}", a.shape()) })
    }
}

/// Inverse of a general square matrix, refused when the condition number
/// exceeds [`COND_BOUND`].
pub fn inverse_guarded(a: &DenseMatrix, op: &'static str) -> Result<DenseMatrix, LinalgError> {
    require_square(a, op)?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite(op));
    }
    let cond = condition_number(a);
    if !(cond <= COND_BOUND) {
        return Err(LinalgError::IllConditioned { op, cond });
    }
    let inv = a.to_nalgebra().lu().try_inverse().ok_or(LinalgError::IllConditioned { op, cond })?;
    Ok(DenseMatrix::from_nalgebra(&inv))
}

/// Solves `A X = B` for symmetric positive definite `A` by Cholesky.
pub fn solve_spd(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    require_square(a, "solve_spd")?;
    if b.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_spd",
            expected: format!("rhs with {} rows", a.rows()),
            found: format!("{} rows", b.rows()),
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(LinalgError::NonFinite("solve_spd"));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let mut sym = a.clone();
    sym.symmetrize();
    let na = sym.to_nalgebra();
    let eigs = na.clone().symmetric_eigenvalues();
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if a.rows() > 0 && min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let cond = if a.rows() == 0 { 1.0 } else { max / min };
    if cond > COND_BOUND {
        return Err(LinalgError::IllConditioned { op: "solve_spd", cond });
    }
    let chol = na.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
    Ok(DenseMatrix::from_nalgebra(&chol.solve(&b.to_nalgebra())))
}

/// `(A + U C V)⁻¹` from `A⁻¹` via `A⁻¹ − A⁻¹U (C⁻¹ + V A⁻¹ U)⁻¹ V A⁻¹`.
///
/// Fails with [`LinalgError::IllConditioned`] when `C` or the inner capacitance
/// matrix is singular to working precision; callers treat that as the signal
/// to rebuild from scratch.
pub fn woodbury_update(
    a_inv: &DenseMatrix,
    u: &DenseMatrix,
    c: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<DenseMatrix, LinalgError> {
    let n = a_inv.rows();
    let k = c.rows();
    require_square(a_inv, "woodbury_update")?;
    require_square(c, "woodbury_update")?;
    if u.shape() != (n, k) || v.shape() != (k, n) {
        return Err(LinalgError::DimensionMismatch {
            op: "woodbury_update",
            expected: format!("U {n}x{k}, V {k}x{n}"),
            found: format!("U {:?}, V {:?}", u.shape(), v.shape()),
        });
    }
    let c_inv = inverse_guarded(c, "woodbury_update (C)")?;
    let ainv_u = a_inv.matmul(u)?;
    let v_ainv = v.matmul(a_inv)?;
    let inner = c_inv.add(&v.matmul(&ainv_u)?)?;
    let inner_inv = inverse_guarded(&inner, "woodbury_update (capacitance)")?;
    let correction = ainv_u.matmul(&inner_inv)?.matmul(&v_ainv)?;
    a_inv.sub(&correction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn woodbury_rank_one_identity() {
        let e1 = DenseMatrix::column_vector(&[1.0, 0.0]);
        let out = woodbury_update(&DenseMatrix::identity(2), &e1, &DenseMatrix::identity(1), &e1.transpose()).unwrap();
        let expected = DenseMatrix::from_diag(&[0.5, 1.0]);
        assert!(out.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn woodbury_singular_c() {
        let e1 = DenseMatrix::column_vector(&[1.0, 0.0]);
        let err = woodbury_update(&DenseMatrix::identity(2), &e1, &DenseMatrix::zeros(1, 1), &e1.transpose());
        assert!(matches!(err, Err(LinalgError::IllConditioned { .. })));
    }

    #[test]
    fn spd_trivial_cases() {
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &b).unwrap(), b);
        let half = solve_spd(&DenseMatrix::identity(3).scale(2.0), &DenseMatrix::identity(3)).unwrap();
        assert!(half.sub(&DenseMatrix::identity(3).scale(0.5)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn spd_rejects_indefinite_and_ill_conditioned() {
        let b = DenseMatrix::identity(2);
        assert!(matches!(
            solve_spd(&DenseMatrix::from_diag(&[1.0, -1.0]), &b),
            Err(LinalgError::NotPositiveDefinite)
        ));
        assert!(matches!(
            solve_spd(&DenseMatrix::from_diag(&[1.0, 1e-14]), &b),
            Err(LinalgError::IllConditioned { .. })
        ));
    }
}
