use super::{DenseMatrix, LinalgError};

/// Computes `(A ⊗ B) x` through `vec(B X Aᵀ)` without materializing the
/// Kronecker product. `x` is read as `vec(X)` with `X` of shape
/// `B.cols() x A.cols()`.
pub fn kron_apply(a: &DenseMatrix, b: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let expected = a.cols() * b.cols();
    if x.len() != expected {
        return Err(LinalgError::DimensionMismatch {
            op: "kron_apply",
            expected: format!("length {expected}"),
            found: format!("length {}", x.len()),
        });
    }
    let xm = DenseMatrix::unvec(b.cols(), a.cols(), x)?;
    let bx = b.matmul(&xm)?;
    // B X Aᵀ = (A (B X)ᵀ)ᵀ
    let y = bx.matmul(&a.transpose())?;
    Ok(y.vec())
}

/// Diagonal of `diag(a) ⊗ diag(b)`: entry `i * b.len() + j` is `a[i] * b[j]`.
pub fn kron_diag(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect()
}

/// Kronecker index of the pair `(i, j)` for factors of size `n`.
#[inline]
pub fn kron_index(i: usize, j: usize, n: usize) -> usize {
    i * n + j
}

/// Inverse of [`kron_index`].
#[inline]
pub fn kron_pair(k: usize, n: usize) -> (usize, usize) {
    (k / n, k % n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        let i2 = DenseMatrix::identity(2);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kron_apply(&i2, &i2, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn diagonal_case() {
        let a = DenseMatrix::from_diag(&[1.0, 2.0]);
        let b = DenseMatrix::from_diag(&[3.0, 4.0]);
        assert_eq!(kron_apply(&a, &b, &[1.0; 4]).unwrap(), vec![3.0, 4.0, 6.0, 8.0]);
        // same ordering as the diagonal helper
        assert_eq!(kron_diag(&[1.0, 2.0], &[3.0, 4.0]), vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn kron_diag_edge_cases() {
        assert_eq!(kron_diag(&[1.0, 1.0], &[1.0, 1.0]), vec![1.0; 4]);
        let z = kron_diag(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(z.iter().filter(|v| **v == 0.0).count(), 2);
    }

    #[test]
    fn rejects_bad_length() {
        let i2 = DenseMatrix::identity(2);
        assert!(matches!(
            kron_apply(&i2, &i2, &[1.0; 3]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn index_roundtrip() {
        for k in 0..25 {
            let (i, j) = kron_pair(k, 5);
            assert_eq!(kron_index(i, j, 5), k);
        }
    }
}
