use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gen_drift_sequence, DriftConfig, HarnessError};
use crate::gen::{derive_seed, random_matrix, random_orthonormal, random_vector, rng_from_seed};
use crate::kronlinalg::{DenseMatrix, EigenWeight};
use crate::oracle;
use crate::projmaint::{ConstraintBatch, Counters, MaintConfig, MaintainedProjection, UpdateKind};

/// Relative tolerance for oracle agreement of `M` and of query outputs.
pub const ORACLE_TOL: f64 = 1e-7;
/// Floating slack on the `|ln(λ/λ̃)| ≤ ε/2` guarantee.
pub const SPECTRAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaintExperimentConfig {
    pub drift: DriftConfig,
    pub maint: MaintConfig,
    pub check_oracle: bool,
    pub queries_per_step: usize,
}

impl Default for MaintExperimentConfig {
    fn default() -> Self {
        Self { drift: DriftConfig::default(), maint: MaintConfig::default(), check_oracle: true, queries_per_step: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintStep {
    pub t: usize,
    pub kind: UpdateKind,
    pub woodbury_rank: usize,
    /// `max_i |ln(λ_i / λ̃_i)|`.
    pub spectral_dev: f64,
    /// Relative Frobenius error of `M` against a rebuild at the stored `λ`.
    pub m_rel_err: Option<f64>,
    /// Largest relative ℓ₂ error of this step's queries against the oracle.
    pub query_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintReport {
    pub config: MaintExperimentConfig,
    pub steps: Vec<MaintStep>,
    pub counters: Counters,
    pub max_spectral_dev: f64,
    pub max_m_rel_err: Option<f64>,
    pub max_query_rel_err: Option<f64>,
}

impl MaintReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let bound = self.config.maint.eps_mp / 2.0 + SPECTRAL_SLACK;
        if self.max_spectral_dev > bound {
            out.push(format!("spectral deviation {:e} exceeds {bound:e}", self.max_spectral_dev));
        }
        if let Some(e) = self.max_m_rel_err.filter(|e| *e > ORACLE_TOL) {
            out.push(format!("M relative error {e:e} exceeds {ORACLE_TOL:e}"));
        }
        if let Some(e) = self.max_query_rel_err.filter(|e| *e > ORACLE_TOL) {
            out.push(format!("query relative error {e:e} exceeds {ORACLE_TOL:e}"));
        }
        out
    }
}

pub(crate) fn rel_l2(a: &[f64], want: &[f64]) -> f64 {
    let num = a.iter().zip(want).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = want.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Random instance for a drift config: constraints, eigenbasis, initial spectrum.
pub(crate) fn instance(cfg: &DriftConfig) -> Result<(ConstraintBatch, EigenWeight), HarnessError> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 1));
    let mats: Vec<DenseMatrix> = (0..cfg.m).map(|_| random_matrix(&mut rng, cfg.n, cfg.n)).collect();
    let constraints = ConstraintBatch::new(&mats)?;
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 2));
    let basis = random_orthonormal(&mut rng, cfg.n);
    let lam0: Vec<f64> = (0..cfg.n).map(|_| rng.random_range(0.5..2.0)).collect();
    Ok((constraints, EigenWeight::new(basis, lam0)?))
}

/// Drives a maintained projection through a drift sequence, querying after
/// every update and optionally comparing everything against the oracle.
pub fn run_maintenance_experiment(cfg: &MaintExperimentConfig) -> Result<MaintReport, HarnessError> {
    cfg.drift.validate().map_err(HarnessError::Config)?;
    let (constraints, eig) = instance(&cfg.drift)?;
    let seq = gen_drift_sequence(&cfg.drift, eig.eigvals());
    let mut mp = MaintainedProjection::init_from_eigen(constraints, &eig, cfg.maint.clone())?;
    let nn = cfg.drift.n * cfg.drift.n;
    let mut qrng = rng_from_seed(derive_seed(cfg.drift.seed, 3));
    let mut steps = Vec::with_capacity(cfg.drift.t);

    for (t, lam_ext) in seq.iter().skip(1).enumerate() {
        let lam_tilde = mp.update(&eig.with_eigvals(lam_ext.clone())?)?;
        let spectral_dev = lam_ext.iter().zip(&lam_tilde).map(|(a, b)| (a / b).ln().abs()).fold(0.0, f64::max);
        let m_rel_err = if cfg.check_oracle {
            let fresh = oracle::exact_inverse_hessian(mp.rotated_constraints(), mp.lam())?;
            Some(mp.m_matrix().sub(&fresh)?.frobenius_norm() / fresh.frobenius_norm())
        } else {
            None
        };
        let proj = if cfg.check_oracle {
            Some(oracle::exact_projection_eigen(mp.constraints(), mp.basis(), mp.lam_tilde())?)
        } else {
            None
        };
        let mut query_rel_err: Option<f64> = None;
        for _ in 0..cfg.queries_per_step {
            let h = random_vector(&mut qrng, nn);
            let out = mp.query_detailed(&h)?;
            if let Some(p) = &proj {
                let want = p.matvec(&out.sketch.gram_apply(&h)?)?;
                let e = rel_l2(&out.p_l, &want);
                query_rel_err = Some(query_rel_err.map_or(e, |m| m.max(e)));
            }
        }
        steps.push(MaintStep {
            t,
            kind: mp.last_update_kind().expect("updated"),
            woodbury_rank: *mp.counters().woodbury_ranks.last().expect("updated"),
            spectral_dev,
            m_rel_err,
            query_rel_err,
        });
    }
    let fold = |f: fn(&MaintStep) -> Option<f64>| steps.iter().filter_map(f).reduce(f64::max);
    Ok(MaintReport {
        config: cfg.clone(),
        max_spectral_dev: steps.iter().map(|s| s.spectral_dev).fold(0.0, f64::max),
        max_m_rel_err: fold(|s| s.m_rel_err),
        max_query_rel_err: fold(|s| s.query_rel_err),
        counters: mp.counters().clone(),
        steps,
    })
}
