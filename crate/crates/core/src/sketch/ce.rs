use serde::{Deserialize, Serialize};

use super::{Sketch, SketchError, SketchFamily};
use crate::gen::{derive_seed, random_unit_vector, rng_from_seed};
use crate::kronlinalg::{dot, norm2};

pub const DEFAULT_CE_DELTA: f64 = 0.01;

/// Empirical coordinate-wise embedding statistics for one `(g, h)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeReport {
    pub family: SketchFamily,
    pub b: usize,
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    /// `⟨g, h⟩`.
    pub inner_true: f64,
    /// Trial mean of `⟨Rg, Rh⟩`.
    pub mean: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    pub mean_bias: f64,
    /// `b · (E[⟨Rg,Rh⟩²] − ⟨g,h⟩²) / (‖g‖²‖h‖²)`.
    pub alpha_hat: f64,
    /// `√b · (1−δ)`-quantile of `|⟨Rg,Rh⟩ − ⟨g,h⟩| / (‖g‖‖h‖)`.
    pub beta_hat: f64,
}

impl CeReport {
    /// `|mean − ⟨g,h⟩|` in units of the standard error.
    pub fn bias_in_std_errors(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.mean_bias == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.mean_bias / self.std_error
        }
    }
}

/// CE statistics for fixed random unit vectors `g, h` drawn from `seed`.
pub fn ce_estimate(
    family: SketchFamily,
    b: usize,
    n: usize,
    trials: usize,
    seed: u64,
    delta: f64,
) -> Result<CeReport, SketchError> {
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let g = random_unit_vector(&mut rng, n);
    let h = random_unit_vector(&mut rng, n);
    ce_estimate_pair(family, b, &g, &h, trials, seed, delta)
}

/// CE statistics for a caller-supplied pair. Trial `t` uses the sketch seeded
/// by `derive_seed(seed, t)`.
pub fn ce_estimate_pair(
    family: SketchFamily,
    b: usize,
    g: &[f64],
    h: &[f64],
    trials: usize,
    seed: u64,
    delta: f64,
) -> Result<CeReport, SketchError> {
    let n = g.len();
    if h.len() != n {
        return Err(SketchError::LengthMismatch { expected: n, found: h.len() });
    }
    if trials < 2 {
        return Err(SketchError::InvalidParameter("need at least 2 trials".into()));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(SketchError::InvalidParameter(format!("delta {delta} not in [0,1)")));
    }
    let inner_true = dot(g, h);
    let norm_prod = norm2(g) * norm2(h);
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let sk = Sketch::generate(family, b, n, derive_seed(seed, t as u64))?;
        let rg = sk.apply(g)?;
        let rh = sk.apply(h)?;
        samples.push(dot(&rg, &rh));
    }
    let tf = trials as f64;
    let mean = samples.iter().sum::<f64>() / tf;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (tf - 1.0);
    let second = samples.iter().map(|s| s * s).sum::<f64>() / tf;
    let (alpha_hat, beta_hat) = if norm_prod > 0.0 {
        let mut devs: Vec<f64> = samples.iter().map(|s| (s - inner_true).abs() / norm_prod).collect();
        devs.sort_by(f64::total_cmp);
        let idx = (((1.0 - delta) * tf).ceil() as usize).clamp(1, trials) - 1;
        (
            b as f64 * (second - inner_true * inner_true) / (norm_prod * norm_prod),
            (b as f64).sqrt() * devs[idx],
        )
    } else {
        (0.0, 0.0)
    };
    Ok(CeReport {
        family,
        b,
        n,
        trials,
        delta,
        inner_true,
        mean,
        std_error: (var / tf).sqrt(),
        mean_bias: (mean - inner_true).abs(),
        alpha_hat,
        beta_hat,
    })
}
