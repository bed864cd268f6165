use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gen::rng_from_seed;
use crate::projmaint::EIG_FLOOR_REL;

/// Which eigenvalues move at each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DriftPattern {
    /// `k` distinct coordinates chosen uniformly each step.
    SparseK { k: usize },
    /// Every coordinate moves every step.
    Uniform,
    /// All coordinates move once every `period` steps; one moves otherwise.
    Bursty { period: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    /// Per-step budget on `Σ_i (mean increment of ln λ_i)²`, as `C1²`.
    pub c1: f64,
    /// Per-step budget on `Σ_i (variance of the increment)²`, as `C2²`.
    pub c2: f64,
    pub pattern: DriftPattern,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { n: 6, m: 8, t: 100, c1: 0.2, c2: 0.01, pattern: DriftPattern::Uniform, seed: 0 }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 2 {
            return Err("n must be >= 2".into());
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err("C1 and C2 must be nonnegative".into());
        }
        match self.pattern {
            DriftPattern::SparseK { k } if k == 0 || k > self.n => Err(format!("sparse-k needs 1 <= k <= n, got {k}")),
            DriftPattern::Bursty { period: 0 } => Err("bursty period must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

/// `λ^{(0)}, …, λ^{(T)}`. Each moving coordinate `i` gets
/// `Δ ln λ_i = μ_i + ξ_i` with `μ_i = ±C1/(2√k)` and `ξ_i` uniform with
/// variance at most `C2/√k`, its amplitude capped at `|μ_i|` so that
/// `|Δ ln λ_i| ≤ C1/√k`. Hence `Σ μ² ≤ C1²` and `Σ Var² ≤ C2²` per step.
pub fn gen_drift_sequence(cfg: &DriftConfig, lam0: &[f64]) -> Vec<Vec<f64>> {
    let n = lam0.len();
    let mut rng = rng_from_seed(cfg.seed);
    let mut lam = lam0.to_vec();
    let mut out = Vec::with_capacity(cfg.t + 1);
    out.push(lam.clone());
    for t in 0..cfg.t {
        let moving: Vec<usize> = match cfg.pattern {
            DriftPattern::SparseK { k } => {
                let mut idx = sample(&mut rng, n, k.min(n)).into_vec();
                idx.sort_unstable();
                idx
            }
            DriftPattern::Uniform => (0..n).collect(),
            DriftPattern::Bursty { period } => {
                if t % period == period - 1 {
                    (0..n).collect()
                } else {
                    vec![rng.random_range(0..n)]
                }
            }
        };
        let k = moving.len().max(1) as f64;
        let mu = cfg.c1 / (2.0 * k.sqrt());
        let amp = (3.0 * cfg.c2 / k.sqrt()).sqrt().min(mu);
        for &i in &moving {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let noise = if amp > 0.0 { rng.random_range(-amp..=amp) } else { 0.0 };
            lam[i] *= (sign * mu + noise).exp();
        }
        let floor = EIG_FLOOR_REL * lam.iter().cloned().fold(1.0, f64::max);
        for v in &mut lam {
            *v = v.max(floor);
        }
        out.push(lam.clone());
    }
    out
}
