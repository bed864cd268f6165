use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplexityConfig {
    pub a: f64,
    pub c: f64,
    pub omega: f64,
    /// Defaults to `ω + 2`.
    pub theta: Option<f64>,
    /// Dimension used for the weight table `g_1 … g_n`.
    pub n: usize,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self { a: 0.5, c: 0.0, omega: 2.373, theta: None, n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub a: f64,
    pub c: f64,
    pub omega: f64,
    pub theta: f64,
    pub f_ac: f64,
    /// `(i, g_i)` for `i = 1..=n`.
    pub weights: Vec<(usize, f64)>,
}

/// `f(a,c) = (c(θ−ω−2) + a(2+θ−cθ−ω+2cω) − θ) / (a−1)`.
pub fn f_ac(a: f64, c: f64, omega: f64, theta: f64) -> Result<f64, HarnessError> {
    if a == 1.0 {
        return Err(HarnessError::Config("f(a, c) is undefined at a = 1".into()));
    }
    Ok((c * (theta - omega - 2.0) + a * (2.0 + theta - c * theta - omega + 2.0 * c * omega) - theta) / (a - 1.0))
}

/// `g_i = n^{−a}` for `i < n^a`, else `i^{(ω−2)/(1−a) − 1} · n^{−a(ω−2)/(1−a)}`.
pub fn weight_g(i: usize, n: usize, a: f64, omega: f64) -> f64 {
    let nf = n as f64;
    if (i as f64) < nf.powf(a) {
        nf.powf(-a)
    } else {
        let e = (omega - 2.0) / (1.0 - a);
        (i as f64).powf(e - 1.0) * nf.powf(-a * e)
    }
}

pub fn complexity_model(cfg: &ComplexityConfig) -> Result<ComplexityReport, HarnessError> {
    if !(cfg.a > 0.0 && cfg.a < 1.0) {
        return Err(HarnessError::Config(format!("a = {} not in (0, 1)", cfg.a)));
    }
    if !(0.0..1.0).contains(&cfg.c) {
        return Err(HarnessError::Config(format!("c = {} not in [0, 1)", cfg.c)));
    }
    let theta = cfg.theta.unwrap_or(cfg.omega + 2.0);
    Ok(ComplexityReport {
        a: cfg.a,
        c: cfg.c,
        omega: cfg.omega,
        theta,
        f_ac: f_ac(cfg.a, cfg.c, cfg.omega, theta)?,
        weights: (1..=cfg.n).map(|i| (i, weight_g(i, cfg.n, cfg.a, cfg.omega))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_indices_use_flat_weight() {
        let n = 100;
        assert_eq!(weight_g(1, n, 0.5, 2.373), 0.1);
        assert_eq!(weight_g(9, n, 0.5, 2.373), 0.1);
        // the two branches meet at i = n^a
        assert!((weight_g(10, n, 0.5, 2.373) - 0.1).abs() < 1e-12);
        assert!(weight_g(50, n, 0.5, 2.373) < 0.1);
    }

    #[test]
    fn a_one_rejected() {
        assert!(f_ac(1.0, 0.0, 2.0, 4.0).is_err());
        assert!(complexity_model(&ComplexityConfig { a: 1.0, ..Default::default() }).is_err());
    }
}
