use rand::Rng;
use serde::{Deserialize, Serialize};

use super::maint::{instance, rel_l2};
use super::{DriftConfig, HarnessError};
use crate::dpcore::{gamma_bound, private_median_with_rng, rank_error, SignedGeometricGrid};
use crate::gen::{derive_seed, random_matrix, random_psd, random_vector, rng_from_seed};
use crate::kronlinalg::{inverse_guarded, kron_apply, woodbury_update};
use crate::oracle;
use crate::projmaint::{MaintConfig, MaintainedProjection};
use crate::sketch::{ce_estimate, CeReport, SketchFamily};

// ---------------------------------------------------------------- CE bench

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CeBenchConfig {
    pub families: Vec<SketchFamily>,
    pub b: usize,
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    /// Threshold constant `c` in `β ≤ c · log^{1.5}(n/δ)`.
    pub beta_const: f64,
    /// Allowed mean bias in standard errors.
    pub bias_std_errors: f64,
    pub seed: u64,
}

impl Default for CeBenchConfig {
    fn default() -> Self {
        Self {
            families: SketchFamily::ALL_DEFAULT.to_vec(),
            b: 256,
            n: 1024,
            trials: 10_000,
            delta: 0.01,
            beta_const: 20.0,
            bias_std_errors: 4.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeCheck {
    pub family: SketchFamily,
    pub unbiased: bool,
    /// Only asserted for families with a polylog `β` (Gaussian, SRHT, AMS).
    pub beta_within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeBenchReport {
    pub config: CeBenchConfig,
    pub beta_bound: f64,
    pub reports: Vec<CeReport>,
    pub checks: Vec<CeCheck>,
}

impl CeBenchReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.checks {
            if !c.unbiased {
                out.push(format!("{} mean is biased", c.family.name()));
            }
            if c.beta_within_bound == Some(false) {
                out.push(format!("{} empirical beta exceeds {:.3}", c.family.name(), self.beta_bound));
            }
        }
        out
    }
}

pub fn ce_bench(cfg: &CeBenchConfig) -> Result<CeBenchReport, HarnessError> {
    let beta_bound = cfg.beta_const * (cfg.n as f64 / cfg.delta).ln().powf(1.5);
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for (i, &fam) in cfg.families.iter().enumerate() {
        let rep = ce_estimate(fam, cfg.b, cfg.n, cfg.trials, derive_seed(cfg.seed, i as u64), cfg.delta)?;
        let polylog = matches!(fam, SketchFamily::Gaussian | SketchFamily::Srht | SketchFamily::Ams);
        checks.push(CeCheck {
            family: fam,
            unbiased: rep.bias_in_std_errors() <= cfg.bias_std_errors,
            beta_within_bound: polylog.then_some(rep.beta_hat <= beta_bound),
        });
        reports.push(rep);
    }
    Ok(CeBenchReport { config: cfg.clone(), beta_bound, reports, checks })
}

// ---------------------------------------------------------------- DP bench

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDistribution {
    /// Every value at `1`.
    PointMass,
    /// Half at `−1`, half at `+1`.
    TwoPoint,
    /// Uniformly random grid points.
    UniformGrid,
    /// Equal-sized runs on consecutive grid points across the whole grid.
    Staircase,
    /// Positive magnitudes with geometrically decaying frequencies.
    Skewed,
}

impl ValueDistribution {
    pub const ALL: [ValueDistribution; 5] = [
        ValueDistribution::PointMass,
        ValueDistribution::TwoPoint,
        ValueDistribution::UniformGrid,
        ValueDistribution::Staircase,
        ValueDistribution::Skewed,
    ];

    pub fn sample(&self, grid: &SignedGeometricGrid, size: usize, seed: u64) -> Vec<f64> {
        let len = grid.len();
        let mut rng = rng_from_seed(seed);
        match self {
            Self::PointMass => vec![1.0; size],
            Self::TwoPoint => (0..size).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect(),
            Self::UniformGrid => (0..size).map(|_| grid.point(rng.random_range(0..len))).collect(),
            Self::Staircase => (0..size).map(|i| grid.point(i * len / size)).collect(),
            Self::Skewed => {
                let zero = len / 2;
                (0..size)
                    .map(|_| {
                        let mut j = 1;
                        while zero + j < len - 1 && rng.random::<f64>() < 0.8 {
                            j += 1;
                        }
                        grid.point(zero + j)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpBenchConfig {
    pub u_bound: f64,
    pub alpha: f64,
    pub size: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub trials: usize,
    pub required_fraction: f64,
    pub distributions: Vec<ValueDistribution>,
    pub smoke_samples: usize,
    pub smoke_size: usize,
    pub seed: u64,
}

impl Default for DpBenchConfig {
    fn default() -> Self {
        // U = 2^24 with α = 1 gives a 101-point grid
        Self {
            u_bound: 16_777_216.0,
            alpha: 1.0,
            size: 2000,
            epsilon: 0.25,
            beta: 0.05,
            trials: 1000,
            required_fraction: 0.95,
            distributions: ValueDistribution::ALL.to_vec(),
            smoke_samples: 100_000,
            smoke_size: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianBatteryReport {
    pub distribution: ValueDistribution,
    pub trials: usize,
    pub gamma: f64,
    pub within_gamma: usize,
    pub fraction: f64,
    pub max_rank_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSmokeReport {
    pub samples: usize,
    pub epsilon: f64,
    /// Grid points with empirical mass at least `1e-3` in both runs.
    pub points_checked: usize,
    pub max_ratio: f64,
    /// Largest `ratio / (e^ε (1 + 4σ))`; at most 1 when the test passes.
    pub max_normalized_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpBenchReport {
    pub config: DpBenchConfig,
    pub grid: SignedGeometricGrid,
    pub batteries: Vec<MedianBatteryReport>,
    pub smoke: DpSmokeReport,
}

impl DpBenchReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .batteries
            .iter()
            .filter(|b| b.fraction < self.config.required_fraction)
            .map(|b| format!("{:?}: only {:.3} of trials within gamma", b.distribution, b.fraction))
            .collect();
        if !self.smoke.pass {
            out.push(format!("DP smoke ratio {:.4} exceeds the allowed bound", self.smoke.max_ratio));
        }
        out
    }
}

/// Repeated private medians of one fixed value set; trial `i` uses the RNG
/// stream `derive_seed(seed, i)`.
pub fn private_median_battery(
    values: &[f64],
    distribution: ValueDistribution,
    grid: &SignedGeometricGrid,
    epsilon: f64,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<MedianBatteryReport, HarnessError> {
    let gamma = gamma_bound(epsilon, beta, grid.len());
    let mut within = 0;
    let mut max_err = 0.0f64;
    for i in 0..trials {
        let x = private_median_with_rng(values, grid, epsilon, &mut rng_from_seed(derive_seed(seed, i as u64)))?;
        let err = rank_error(values, x);
        max_err = max_err.max(err);
        if err <= gamma {
            within += 1;
        }
    }
    Ok(MedianBatteryReport {
        distribution,
        trials,
        gamma,
        within_gamma: within,
        fraction: within as f64 / trials.max(1) as f64,
        max_rank_error: max_err,
    })
}

/// Output histograms of the private median on two neighbouring value sets.
pub fn dp_smoke(
    grid: &SignedGeometricGrid,
    values: &[f64],
    neighbour: &[f64],
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<DpSmokeReport, HarnessError> {
    let hist = |vals: &[f64], s: u64| -> Result<Vec<usize>, HarnessError> {
        let mut rng = rng_from_seed(s);
        let mut h = vec![0usize; grid.len()];
        for _ in 0..samples {
            let x = private_median_with_rng(vals, grid, epsilon, &mut rng)?;
            h[grid.index_of(x).expect("output is a grid point")] += 1;
        }
        Ok(h)
    };
    let a = hist(values, derive_seed(seed, 0))?;
    let b = hist(neighbour, derive_seed(seed, 1))?;
    let nf = samples as f64;
    let mut checked = 0;
    let mut max_ratio = 0.0f64;
    let mut max_norm = 0.0f64;
    for (&ca, &cb) in a.iter().zip(&b) {
        let (pa, pb) = (ca as f64 / nf, cb as f64 / nf);
        if pa < 1e-3 || pb < 1e-3 {
            continue;
        }
        checked += 1;
        let ratio = (pa / pb).max(pb / pa);
        let sigma = ((1.0 - pa) / (nf * pa) + (1.0 - pb) / (nf * pb)).sqrt();
        max_ratio = max_ratio.max(ratio);
        max_norm = max_norm.max(ratio / (epsilon.exp() * (1.0 + 4.0 * sigma)));
    }
    Ok(DpSmokeReport {
        samples,
        epsilon,
        points_checked: checked,
        max_ratio,
        max_normalized_ratio: max_norm,
        pass: max_norm <= 1.0,
    })
}

pub fn dp_bench(cfg: &DpBenchConfig) -> Result<DpBenchReport, HarnessError> {
    let grid = SignedGeometricGrid::new(cfg.u_bound, cfg.alpha)?;
    let mut batteries = Vec::new();
    for (i, &dist) in cfg.distributions.iter().enumerate() {
        let s = derive_seed(cfg.seed, i as u64);
        let values = dist.sample(&grid, cfg.size, derive_seed(s, 0));
        batteries.push(private_median_battery(&values, dist, &grid, cfg.epsilon, cfg.beta, cfg.trials, derive_seed(s, 1))?);
    }
    // neighbours: move the smallest element of a centred staircase to the top
    let mid = grid.len() / 2;
    let half = cfg.smoke_size / 2;
    let values: Vec<f64> = (0..cfg.smoke_size).map(|i| grid.point((mid + i).saturating_sub(half).min(grid.len() - 1))).collect();
    let mut neighbour = values.clone();
    neighbour[0] = grid.point(grid.len() - 1);
    let smoke = dp_smoke(&grid, &values, &neighbour, cfg.epsilon, cfg.smoke_samples, derive_seed(cfg.seed, u64::MAX))?;
    Ok(DpBenchReport { config: cfg.clone(), grid, batteries, smoke })
}

// ---------------------------------------------------------------- oracle suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOracleConfig {
    pub instances: usize,
    pub max_n: usize,
    pub seed: u64,
}

impl Default for VerifyOracleConfig {
    fn default() -> Self {
        Self { instances: 100, max_n: 6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOracleReport {
    pub config: VerifyOracleConfig,
    pub checks: Vec<OracleCheck>,
}

impl VerifyOracleReport {
    pub fn violations(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: error {:e} above {:e}", c.name, c.max_error, c.tolerance))
            .collect()
    }
}

fn check(name: &str, instances: usize, tolerance: f64, errs: impl Iterator<Item = f64>) -> OracleCheck {
    let max_error = errs.fold(0.0, f64::max);
    OracleCheck { name: name.into(), instances, max_error, tolerance, pass: max_error <= tolerance }
}

/// Checks the Kronecker kernels, the Woodbury update and freshly initialized
/// maintained projections against materialized references.
pub fn verify_oracle(cfg: &VerifyOracleConfig) -> Result<VerifyOracleReport, HarnessError> {
    let k = cfg.instances;
    let mut rng = rng_from_seed(cfg.seed);
    let mut checks = Vec::new();

    let mut kron_err = Vec::new();
    for i in 0..k {
        let n = 1 + i % cfg.max_n.max(1);
        let a = random_matrix(&mut rng, n, n);
        let b = random_matrix(&mut rng, n, n);
        let x = random_vector(&mut rng, n * n);
        let want = a.kron(&b).matvec(&x)?;
        kron_err.push(rel_l2(&kron_apply(&a, &b, &x)?, &want));
    }
    checks.push(check("kron_apply", k, 1e-12, kron_err.into_iter()));

    let mut wb_err = Vec::new();
    for _ in 0..k {
        let n = rng.random_range(2..=10);
        let r = rng.random_range(1..=5.min(n));
        let a = random_psd(&mut rng, n, n, 1.0);
        let u = random_matrix(&mut rng, n, r);
        let v = random_matrix(&mut rng, r, n);
        let c = random_psd(&mut rng, r, r, 1.0);
        let a_inv = inverse_guarded(&a, "verify")?;
        let direct = inverse_guarded(&a.add(&u.matmul(&c)?.matmul(&v)?)?, "verify")?;
        let got = woodbury_update(&a_inv, &u, &c, &v)?;
        wb_err.push(got.sub(&direct)?.frobenius_norm() / direct.frobenius_norm());
    }
    checks.push(check("woodbury_update", k, 1e-9, wb_err.into_iter()));

    let trials = (k / 10).max(1);
    let mut init_err = Vec::new();
    for i in 0..trials {
        let n = 2 + i % 3;
        let m = (n * n / 2).max(1);
        let drift = DriftConfig { n, m, seed: derive_seed(cfg.seed, i as u64), ..DriftConfig::default() };
        let (constraints, eig) = instance(&drift)?;
        let mut mp = MaintainedProjection::init_from_eigen(constraints.clone(), &eig, MaintConfig::default())?;
        let h = random_vector(&mut rng, n * n);
        let out = mp.query_detailed(&h)?;
        let p = oracle::exact_projection(&constraints, &eig.reconstruct(), oracle::Variant::Symmetric)?;
        init_err.push(rel_l2(&out.p_l, &p.matvec(&out.sketch.gram_apply(&h)?)?));
    }
    checks.push(check("init_query_vs_projection", trials, 1e-8, init_err.into_iter()));

    Ok(VerifyOracleReport { config: cfg.clone(), checks })
}
