use rand::Rng;

use super::{DpError, SignedGeometricGrid};
use crate::gen::rng_from_seed;

/// Constant in the rank-slack bound `Γ = C_GAMMA · ε⁻¹ · ln(|grid| / β)`.
pub const C_GAMMA: f64 = 4.0;

pub fn gamma_bound(epsilon: f64, beta: f64, grid_len: usize) -> f64 {
    C_GAMMA / epsilon * (grid_len as f64 / beta).ln()
}

/// Rank utility `u(x) = max(#{v < x}, #{v > x}) − ⌈|S|/2⌉`, clamped at 0,
/// for every grid point in ascending order.
pub fn median_utilities(values: &[f64], grid: &SignedGeometricGrid) -> Result<Vec<usize>, DpError> {
    if values.is_empty() {
        return Err(DpError::Empty);
    }
    let mut hist = vec![0usize; grid.len()];
    for &v in values {
        hist[grid.index_of(v).ok_or(DpError::OffGrid(v))?] += 1;
    }
    let total = values.len();
    let half = total.div_ceil(2);
    let mut below = 0usize;
    let mut out = Vec::with_capacity(hist.len());
    for &c in &hist {
        let above = total - below - c;
        out.push(below.max(above).saturating_sub(half));
        below += c;
    }
    Ok(out)
}

/// Exponential mechanism over the grid with weights `exp(−ε·u(x)/2)`.
pub fn private_median_with_rng(
    values: &[f64],
    grid: &SignedGeometricGrid,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<f64, DpError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(DpError::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let util = median_utilities(values, grid)?;
    // min utility is 0, so every weight is in (0, 1] and the sum is >= 1
    let weights: Vec<f64> = util.iter().map(|&u| (-epsilon * u as f64 / 2.0).exp()).collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for w in &weights {
        let y = w - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        cumulative.push(sum);
    }
    let target = rng.random::<f64>() * sum;
    let idx = cumulative.partition_point(|&c| c <= target).min(weights.len() - 1);
    Ok(grid.point(idx))
}

/// Seeded convenience wrapper around [`private_median_with_rng`]. `beta`
/// only enters the accuracy bound and is validated here for completeness.
pub fn private_median(
    values: &[f64],
    grid: &SignedGeometricGrid,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> Result<f64, DpError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DpError::InvalidParameter(format!("beta = {beta} not in (0, 1)")));
    }
    private_median_with_rng(values, grid, epsilon, &mut rng_from_seed(seed))
}

/// `max(0, |S|/2 − min(#{v ≥ x}, #{v ≤ x}))`.
pub fn rank_error(values: &[f64], x: f64) -> f64 {
    let ge = values.iter().filter(|&&v| v >= x).count();
    let le = values.iter().filter(|&&v| v <= x).count();
    (values.len() as f64 / 2.0 - ge.min(le) as f64).max(0.0)
}
