use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::adaptive::{
    AdaptiveError, AdaptiveWrapper, ExactNormEstimator, Mode, ObliviousEstimator, SketchedNormEstimator, WrapperCounters,
    WrapperParams,
};
use crate::dpcore::SignedGeometricGrid;
use crate::gen::{derive_seed, random_matrix, random_unit_vector, rng_from_seed, SeededRng};
use crate::kronlinalg::{dot, norm2, DenseMatrix};
use crate::sketch::SketchFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// Inputs drawn in advance, independent of outputs.
    Oblivious,
    /// `h_{t+1}` is the normalized sum of noise and `h_t` weighted by `u_t`.
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimatorKind {
    Exact,
    Sketched { family: SketchFamily, b: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveExperimentConfig {
    pub adversary: Adversary,
    pub estimator: EstimatorKind,
    /// Accuracy `γ` claimed for the inner estimator; enters the error bound.
    pub gamma: f64,
    pub t: usize,
    /// Rows of `G`.
    pub m: usize,
    /// Columns of `G` (length of `h`).
    pub d: usize,
    /// Query-set size for set-query runs.
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
    pub u_bound: f64,
    /// Explicit copy count `L`; the formula (with `scale`) is used when absent.
    pub copies: Option<usize>,
    /// Explicit subsample size `q`; the formula is used when absent.
    pub subsample: Option<usize>,
    pub scale: f64,
    pub delta0_divisor: f64,
    pub runs: usize,
    /// Fraction of runs that must be accurate at every step.
    pub required_success: f64,
    pub zero_matrix: bool,
    pub check_oracle: bool,
    pub emit_records: bool,
    pub seed: u64,
}

impl Default for AdaptiveExperimentConfig {
    fn default() -> Self {
        Self {
            adversary: Adversary::Feedback,
            estimator: EstimatorKind::Exact,
            gamma: 0.0,
            t: 50,
            m: 16,
            d: 16,
            k: 8,
            alpha: 0.25,
            delta: 0.1,
            u_bound: 1024.0,
            copies: Some(20),
            subsample: Some(7),
            scale: 1.0,
            delta0_divisor: 4.0,
            runs: 10,
            required_success: 0.9,
            zero_matrix: false,
            check_oracle: true,
            emit_records: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStep {
    pub run: usize,
    pub t: usize,
    pub query_set: Option<Vec<usize>>,
    pub u: Vec<f64>,
    pub truth: Option<Vec<f64>>,
    /// Allowed absolute error for each output.
    pub bound: Option<Vec<f64>>,
    pub ok: Option<bool>,
    pub sampled: Vec<usize>,
    pub rank_slack: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRunSummary {
    pub run: usize,
    pub seed: u64,
    /// Steps with at least one output outside its bound.
    pub failed_steps: usize,
    /// Largest `|u − truth| / bound` over the run.
    pub max_error_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub mode: Mode,
    pub config: AdaptiveExperimentConfig,
    pub copies: usize,
    pub subsample: usize,
    pub eps_pm: f64,
    pub delta0: f64,
    pub beta: f64,
    /// Rank slack `Γ` of each private median.
    pub rank_gamma: f64,
    pub grid: SignedGeometricGrid,
    pub counters: WrapperCounters,
    pub runs: Vec<AdaptiveRunSummary>,
    /// Fraction of runs accurate at every step (when oracle checking is on).
    pub success_fraction: Option<f64>,
    pub records: Vec<AdaptiveStep>,
}

impl AdaptiveReport {
    pub fn violations(&self) -> Vec<String> {
        match self.success_fraction {
            Some(f) if f < self.config.required_success => vec![format!(
                "only {:.3} of runs accurate at every step, required {:.3}",
                f, self.config.required_success
            )],
            _ => Vec::new(),
        }
    }
}

struct RunOutcome {
    records: Vec<AdaptiveStep>,
    summary: AdaptiveRunSummary,
    counters: WrapperCounters,
    header: (usize, usize, f64, f64, f64, SignedGeometricGrid),
}

fn wrapper_for<E: ObliviousEstimator>(
    cfg: &AdaptiveExperimentConfig,
    mode: Mode,
    seed: u64,
    factory: impl FnMut(u64) -> Result<E, AdaptiveError>,
) -> Result<AdaptiveWrapper<E>, AdaptiveError> {
    let params = WrapperParams {
        t_max: cfg.t,
        u_bound: cfg.u_bound,
        alpha: cfg.alpha,
        delta: cfg.delta,
        scale: cfg.scale,
        delta0_divisor: cfg.delta0_divisor,
        seed,
    };
    match (cfg.copies, cfg.subsample, mode) {
        (Some(l), Some(q), _) => AdaptiveWrapper::with_sizes(factory, params, mode, l, q),
        (None, None, Mode::Norm) => AdaptiveWrapper::norm(factory, params),
        (None, None, Mode::SetQuery { k }) => AdaptiveWrapper::set_query(factory, params, k),
        _ => Err(AdaptiveError::InvalidParameter("set both copies and subsample, or neither".into())),
    }
}

fn next_h(h: &[f64], s: f64, rng: &mut SeededRng) -> Vec<f64> {
    let d = h.len() as f64;
    let mut v: Vec<f64> = h
        .iter()
        .map(|x| (1.0 + 2.0 * s) * x + rng.sample::<f64, _>(StandardNormal) / d.sqrt())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

fn run_one<E: ObliviousEstimator>(
    cfg: &AdaptiveExperimentConfig,
    mode: Mode,
    run: usize,
    factory: impl FnMut(u64) -> Result<E, AdaptiveError>,
) -> Result<RunOutcome, HarnessError> {
    let seed = derive_seed(cfg.seed, run as u64);
    let g = if cfg.zero_matrix {
        DenseMatrix::zeros(cfg.m, cfg.d)
    } else {
        random_matrix(&mut rng_from_seed(derive_seed(seed, 1)), cfg.m, cfg.d).scale(1.0 / (cfg.d as f64).sqrt())
    };
    let row_norms: Vec<f64> = (0..cfg.m).map(|j| dot(g.row(j), g.row(j))).collect();
    let fro2: f64 = row_norms.iter().sum();
    let mut input_rng = rng_from_seed(derive_seed(seed, 2));
    let mut w = wrapper_for(cfg, mode, derive_seed(seed, 4), factory)?;
    let err_scale = cfg.alpha + cfg.gamma + cfg.alpha * cfg.gamma;

    let mut h = random_unit_vector(&mut input_rng, cfg.d);
    let mut query: Vec<usize> = (0..cfg.k.min(cfg.m)).collect();
    let mut records = Vec::with_capacity(cfg.t);
    let mut failed_steps = 0;
    let mut max_ratio = 0.0f64;
    for t in 0..cfg.t {
        let h2 = dot(&h, &h);
        let (u, truth, bound) = match mode {
            Mode::Norm => {
                let u = w.norm_step(&g, &h)?;
                let truth: f64 = g.matvec(&h)?.iter().map(|v| v * v).sum();
                (vec![u], vec![truth], vec![err_scale * fro2 * h2])
            }
            Mode::SetQuery { .. } => {
                let u = w.setquery_step(&g, &h, &query)?;
                let truth: Vec<f64> = query.iter().map(|&j| dot(g.row(j), &h).powi(2)).collect();
                let bound: Vec<f64> = query.iter().map(|&j| err_scale * row_norms[j] * h2).collect();
                (u, truth, bound)
            }
        };
        let rec = w.last_record().expect("step recorded").clone();
        let (truth, bound, ok) = if cfg.check_oracle {
            let mut ok = true;
            for ((x, y), b) in u.iter().zip(&truth).zip(&bound) {
                let err = (x - y).abs();
                if err > *b {
                    ok = false;
                }
                let ratio = if *b > 0.0 { err / b } else if err > 0.0 { f64::INFINITY } else { 0.0 };
                max_ratio = max_ratio.max(ratio);
            }
            if !ok {
                failed_steps += 1;
            }
            (Some(truth), Some(bound), Some(ok))
        } else {
            (None, None, None)
        };

        // the adversary sees u_t
        match cfg.adversary {
            Adversary::Oblivious => h = random_unit_vector(&mut input_rng, cfg.d),
            Adversary::Feedback => {
                let denom = match mode {
                    Mode::Norm => fro2 * h2,
                    Mode::SetQuery { .. } => query.iter().map(|&j| row_norms[j]).sum::<f64>() * h2,
                };
                let s = if denom > 0.0 { u.iter().sum::<f64>() / denom } else { 0.0 };
                h = next_h(&h, s.clamp(-4.0, 4.0), &mut input_rng);
                if let Mode::SetQuery { k } = mode {
                    let mut order: Vec<usize> = (0..k).collect();
                    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
                    let mut next: Vec<usize> = order[..k.div_ceil(2)].iter().map(|&i| query[i]).collect();
                    while next.len() < k {
                        let j = input_rng.random_range(0..cfg.m);
                        if !next.contains(&j) {
                            next.push(j);
                        }
                    }
                    next.sort_unstable();
                    query = next;
                }
            }
        }
        if cfg.emit_records {
            records.push(AdaptiveStep {
                run,
                t,
                query_set: rec.query_set,
                u,
                truth,
                bound,
                ok,
                sampled: rec.sampled,
                rank_slack: rec.rank_slack,
            });
        }
    }
    Ok(RunOutcome {
        records,
        summary: AdaptiveRunSummary { run, seed, failed_steps, max_error_ratio: max_ratio },
        counters: w.counters().clone(),
        header: (w.copies(), w.subsample_size(), w.delta0(), w.beta(), w.gamma(), w.grid().clone()),
    })
}

/// Runs `cfg.runs` independent trajectories of the norm or set-query
/// reduction against the configured adversary.
pub fn run_adaptive_experiment(mode: Mode, cfg: &AdaptiveExperimentConfig) -> Result<AdaptiveReport, HarnessError> {
    if cfg.runs == 0 || cfg.t == 0 || cfg.m == 0 || cfg.d == 0 {
        return Err(HarnessError::Config("runs, t, m and d must be >= 1".into()));
    }
    let mode = match mode {
        Mode::SetQuery { k } if k == 0 || k > cfg.m => {
            return Err(HarnessError::Config(format!("set size k = {k} must be in 1..=m")));
        }
        other => other,
    };
    let mut outcomes = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let o = match cfg.estimator {
            EstimatorKind::Exact => run_one(cfg, mode, run, |_| Ok(ExactNormEstimator::new()))?,
            EstimatorKind::Sketched { family, b } => {
                run_one(cfg, mode, run, |s| SketchedNormEstimator::new(family, b, cfg.d, s))?
            }
        };
        outcomes.push(o);
    }
    let (copies, subsample, delta0, beta, rank_gamma, grid) = outcomes[0].header.clone();
    let mut counters = WrapperCounters::default();
    for o in &outcomes {
        counters.steps += o.counters.steps;
        counters.copy_updates += o.counters.copy_updates;
        counters.inner_queries += o.counters.inner_queries;
        counters.clamped += o.counters.clamped;
    }
    let success_fraction = cfg
        .check_oracle
        .then(|| outcomes.iter().filter(|o| o.summary.failed_steps == 0).count() as f64 / cfg.runs as f64);
    let mut runs = Vec::with_capacity(cfg.runs);
    let mut records = Vec::new();
    for o in outcomes {
        runs.push(o.summary);
        records.extend(o.records);
    }
    Ok(AdaptiveReport {
        mode,
        config: cfg.clone(),
        copies,
        subsample,
        eps_pm: crate::adaptive::EPS_PM,
        delta0,
        beta,
        rank_gamma,
        grid,
        counters,
        runs,
        success_fraction,
        records,
    })
}
