use super::MaintError;
use crate::kronlinalg::kron_index;

/// Result of [`soft_threshold`].
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub lam_hat: Vec<f64>,
    pub r: usize,
    /// Sorting permutation by `|ln λ_new − ln λ|` descending, ties by index.
    pub order: Vec<usize>,
}

/// Picks how many of the largest log-changes to absorb, growing `r`
/// geometrically (×1.5) while the next block is nearly as large as the
/// current boundary entry.
pub fn soft_threshold(lam: &[f64], lam_new: &[f64], r: usize) -> Result<Thresholded, MaintError> {
    let n = lam.len();
    if lam_new.len() != n {
        return Err(MaintError::LengthMismatch { expected: n, found: lam_new.len() });
    }
    if lam.iter().chain(lam_new).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(MaintError::InvalidParameter("soft_threshold needs positive finite eigenvalues".into()));
    }
    if r == 0 {
        return Err(MaintError::InvalidParameter("soft_threshold needs r >= 1".into()));
    }
    let y: Vec<f64> = lam_new.iter().zip(lam).map(|(a, b)| a.ln() - b.ln()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ascending index on ties
    order.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()));

    let mut r = r.min(n);
    let shrink = 1.0 - 1.0 / (n as f64).ln();
    while 1.5 * (r as f64) < n as f64 {
        let next = (1.5 * r as f64).ceil() as usize;
        if y[order[next - 1]].abs() >= shrink * y[order[r - 1]].abs() {
            r = next.min(n);
        } else {
            break;
        }
    }
    let mut lam_hat = lam.to_vec();
    for &i in &order[..r] {
        lam_hat[i] = lam_new[i];
    }
    Ok(Thresholded { lam_hat, r, order })
}

/// Kronecker indices `(i, j)` (as `i * n + j`) with `i ∈ S` or `j ∈ S`, sorted.
/// These are exactly the diagonal positions where `Λ⊗C + C⊗Λ + C⊗C` can be
/// nonzero when `C` is supported on `S`.
pub fn expand_index_set(support: &[usize], n: usize) -> Result<Vec<usize>, MaintError> {
    let mut member = vec![false; n];
    for &i in support {
        if i >= n {
            return Err(MaintError::IndexOutOfRange { index: i, n });
        }
        member[i] = true;
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if member[i] || member[j] {
                out.push(kron_index(i, j, n));
            }
        }
    }
    Ok(out)
}
