use serde::{Deserialize, Serialize};

use super::DpError;

/// An `(ε, δ)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, DpError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) || !(0.0..=1.0).contains(&delta) {
            return Err(DpError::InvalidParameter(format!("invalid budget ({epsilon}, {delta})")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Self {
        Self { epsilon, delta: 0.0 }
    }
}

/// `(Σ ε_i, Σ δ_i)`. Pure budgets yield a pure result.
pub fn simple_composition(budgets: &[PrivacyBudget]) -> PrivacyBudget {
    PrivacyBudget {
        epsilon: budgets.iter().map(|b| b.epsilon).sum(),
        delta: budgets.iter().map(|b| b.delta).sum(),
    }
}

/// `k`-fold adaptive composition of `(ε, δ)` mechanisms:
/// `(√(2k ln(1/δ₀))·ε + 2kε², δ₀ + kδ)`.
pub fn advanced_composition(epsilon: f64, delta: f64, k: usize, delta0: f64) -> Result<PrivacyBudget, DpError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DpError::InvalidParameter(format!("epsilon = {epsilon} not in [0, 1]")));
    }
    if !(delta0 > 0.0 && delta0 <= 1.0) {
        return Err(DpError::InvalidParameter(format!("delta0 = {delta0} not in (0, 1]")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(DpError::InvalidParameter(format!("delta = {delta} not in [0, 1]")));
    }
    let kf = k as f64;
    Ok(PrivacyBudget {
        epsilon: (2.0 * kf * (1.0 / delta0).ln()).sqrt() * epsilon + 2.0 * kf * epsilon * epsilon,
        delta: delta0 + kf * delta,
    })
}

/// Privacy of running an `ε`-DP mechanism on `k` of `n` records sampled with
/// replacement: `(6k/n)·ε`.
pub fn amplification(epsilon: f64, k: usize, n: usize) -> Result<f64, DpError> {
    if n == 0 || 2 * k > n {
        return Err(DpError::InvalidParameter(format!("need k <= n/2, got k = {k}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DpError::InvalidParameter(format!("epsilon = {epsilon} not in [0, 1]")));
    }
    Ok(6.0 * k as f64 / n as f64 * epsilon)
}
