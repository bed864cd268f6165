use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AdaptiveError, ObliviousEstimator};
use crate::dpcore::{gamma_bound, private_median_with_rng, rank_error, SignedGeometricGrid};
use crate::gen::{derive_seed, rng_from_seed, SeededRng};
use crate::kronlinalg::DenseMatrix;

/// Multiplier in `q = ⌈C_Q · ln(log_{1+α}(U) · T / (α δ))⌉`.
pub const C_Q: f64 = 8.0;
/// Multiplier in the set-query copy count; with `k = 1` it reproduces the
/// norm-mode count `600 q √(4 T ln(800T/δ))`.
pub const C_L_SET: f64 = 1200.0;
/// Privacy parameter of each private median.
pub const EPS_PM: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Mode {
    Norm,
    SetQuery { k: usize },
}

/// Inputs shared by both reductions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrapperParams {
    pub t_max: usize,
    pub u_bound: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Shrinks `L` for desk-scale runs; 1 keeps the full constant.
    pub scale: f64,
    /// `δ₀ = δ / (delta0_divisor · T)`.
    pub delta0_divisor: f64,
    pub seed: u64,
}

impl WrapperParams {
    pub fn new(t_max: usize, u_bound: f64, alpha: f64, delta: f64, scale: f64, seed: u64) -> Self {
        Self { t_max, u_bound, alpha, delta, scale, delta0_divisor: 4.0, seed }
    }

    fn validate(&self) -> Result<(), AdaptiveError> {
        let bad = |s: String| Err(AdaptiveError::InvalidParameter(s));
        if self.t_max == 0 {
            return bad("T must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} not in (0, 1)", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} not in (0, 1)", self.delta));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale = {} must be positive", self.scale));
        }
        if !(self.delta0_divisor > 0.0) {
            return bad("delta0 divisor must be positive".into());
        }
        if !(self.u_bound > 1.0 && self.u_bound.is_finite()) {
            return bad(format!("U = {} must be > 1", self.u_bound));
        }
        Ok(())
    }

    fn delta0(&self) -> f64 {
        self.delta / (self.delta0_divisor * self.t_max as f64)
    }
}

/// `q = max(1, ⌈C_Q · ln(log_{1+α}(U) · T / (α δ))⌉)`.
pub fn norm_subsample_size(t_max: usize, u_bound: f64, alpha: f64, delta: f64) -> usize {
    let log_u = u_bound.ln() / (1.0 + alpha).ln();
    let q = (C_Q * (log_u * t_max as f64 / (alpha * delta)).ln()).ceil();
    if q.is_finite() && q >= 1.0 {
        q as usize
    } else {
        1
    }
}

/// `L = ⌈scale · 600 · q · √(4T · ln(800T/δ))⌉`.
pub fn norm_copies(q: usize, t_max: usize, delta: f64, scale: f64) -> usize {
    let t = t_max as f64;
    (scale * 600.0 * q as f64 * (4.0 * t * (800.0 * t / delta).ln()).sqrt()).ceil() as usize
}

/// `L = ⌈scale · C_L_SET · q · √(k T · ln(800T/δ))⌉`.
pub fn setquery_copies(q: usize, k: usize, t_max: usize, delta: f64, scale: f64) -> usize {
    let t = t_max as f64;
    (scale * C_L_SET * q as f64 * (k as f64 * t * (800.0 * t / delta).ln()).sqrt()).ceil() as usize
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WrapperCounters {
    pub steps: usize,
    pub copy_updates: usize,
    pub inner_queries: usize,
    /// Copy outputs beyond `±U` that were clamped.
    pub clamped: usize,
}

/// What happened at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// One entry in norm mode, `k` in set-query mode.
    pub u: Vec<f64>,
    pub query_set: Option<Vec<usize>>,
    pub sampled: Vec<usize>,
    /// Rank error of each output within its `q` rounded inputs.
    pub rank_slack: Vec<f64>,
}

pub struct AdaptiveWrapper<E> {
    copies: Vec<E>,
    grid: SignedGeometricGrid,
    params: WrapperParams,
    mode: Mode,
    q: usize,
    rng: SeededRng,
    step: usize,
    counters: WrapperCounters,
    last: Option<StepRecord>,
}

impl<E: ObliviousEstimator> AdaptiveWrapper<E> {
    /// Norm-estimation reduction with the formula sizes for `L` and `q`.
    pub fn norm(factory: impl FnMut(u64) -> Result<E, AdaptiveError>, params: WrapperParams) -> Result<Self, AdaptiveError> {
        params.validate()?;
        let q = norm_subsample_size(params.t_max, params.u_bound, params.alpha, params.delta);
        let l = norm_copies(q, params.t_max, params.delta, params.scale).max(q);
        Self::with_sizes(factory, params, Mode::Norm, l, q)
    }

    /// Set-query reduction for query sets of size `k`.
    pub fn set_query(
        factory: impl FnMut(u64) -> Result<E, AdaptiveError>,
        params: WrapperParams,
        k: usize,
    ) -> Result<Self, AdaptiveError> {
        params.validate()?;
        if k == 0 {
            return Err(AdaptiveError::InvalidParameter("k must be >= 1".into()));
        }
        let q = norm_subsample_size(params.t_max, params.u_bound, params.alpha, params.delta);
        let l = setquery_copies(q, k, params.t_max, params.delta, params.scale).max(q);
        Self::with_sizes(factory, params, Mode::SetQuery { k }, l, q)
    }

    /// Explicit `L` and `q`, bypassing the formulas.
    pub fn with_sizes(
        mut factory: impl FnMut(u64) -> Result<E, AdaptiveError>,
        params: WrapperParams,
        mode: Mode,
        l: usize,
        q: usize,
    ) -> Result<Self, AdaptiveError> {
        params.validate()?;
        if q == 0 || l < q {
            return Err(AdaptiveError::InvalidParameter(format!("need L >= q >= 1, got L = {l}, q = {q}")));
        }
        if let Mode::SetQuery { k: 0 } = mode {
            return Err(AdaptiveError::InvalidParameter("k must be >= 1".into()));
        }
        let grid = SignedGeometricGrid::new(params.u_bound, params.alpha)?;
        let copies = (0..l).map(|i| factory(derive_seed(params.seed, i as u64))).collect::<Result<Vec<_>, _>>()?;
        let rng = rng_from_seed(derive_seed(params.seed, u64::MAX));
        Ok(Self { copies, grid, params, mode, q, rng, step: 0, counters: WrapperCounters::default(), last: None })
    }

    pub fn copies(&self) -> usize {
        self.copies.len()
    }

    pub fn subsample_size(&self) -> usize {
        self.q
    }

    pub fn grid(&self) -> &SignedGeometricGrid {
        &self.grid
    }

    pub fn params(&self) -> &WrapperParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn counters(&self) -> &WrapperCounters {
        &self.counters
    }

    pub fn last_record(&self) -> Option<&StepRecord> {
        self.last.as_ref()
    }

    pub fn copy(&self, i: usize) -> &E {
        &self.copies[i]
    }

    pub fn eps_pm(&self) -> f64 {
        EPS_PM
    }

    pub fn delta0(&self) -> f64 {
        self.params.delta0()
    }

    /// Failure probability given to each private median.
    pub fn beta(&self) -> f64 {
        match self.mode {
            Mode::Norm => self.params.delta0(),
            Mode::SetQuery { .. } => self.params.delta / (4.0 * self.params.t_max as f64),
        }
    }

    /// Rank slack `Γ` promised by the private median at `ε_pm` and `β`.
    pub fn gamma(&self) -> f64 {
        gamma_bound(EPS_PM, self.beta(), self.grid.len())
    }

    fn begin_step(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<Vec<usize>, AdaptiveError> {
        if self.step >= self.params.t_max {
            return Err(AdaptiveError::BudgetExhausted(self.params.t_max));
        }
        for c in &mut self.copies {
            c.update(g, h)?;
        }
        self.counters.copy_updates += self.copies.len();
        let l = self.copies.len();
        Ok((0..self.q).map(|_| self.rng.random_range(0..l)).collect())
    }

    fn to_grid(&mut self, v: f64) -> Result<f64, AdaptiveError> {
        let u = self.params.u_bound;
        let v = if v.abs() > u {
            self.counters.clamped += 1;
            u.copysign(v)
        } else {
            v
        };
        Ok(self.grid.round(v)?)
    }

    fn aggregate(&mut self, vals: &[f64]) -> Result<(f64, f64), AdaptiveError> {
        let u = private_median_with_rng(vals, &self.grid, EPS_PM, &mut self.rng)?;
        Ok((u, rank_error(vals, u)))
    }

    fn finish(&mut self, u: Vec<f64>, query_set: Option<Vec<usize>>, sampled: Vec<usize>, slack: Vec<f64>) {
        self.last = Some(StepRecord { t: self.step, u, query_set, sampled, rank_slack: slack });
        self.step += 1;
        self.counters.steps += 1;
    }

    /// One step of the norm reduction; returns `u_t ≈ ‖G_t h_t‖²`.
    pub fn norm_step(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<f64, AdaptiveError> {
        if self.mode != Mode::Norm {
            return Err(AdaptiveError::WrongMode("norm"));
        }
        let sampled = self.begin_step(g, h)?;
        let mut vals = Vec::with_capacity(sampled.len());
        for &i in &sampled {
            let v = self.copies[i].query()?;
            vals.push(self.to_grid(v)?);
        }
        self.counters.inner_queries += sampled.len();
        let (u, slack) = self.aggregate(&vals)?;
        self.finish(vec![u], None, sampled, vec![slack]);
        Ok(u)
    }

    /// One step of the set-query reduction; returns `(u_t)_j ≈ (g_jᵀ h_t)²`
    /// for `j` in `query`. The subsample is shared across coordinates.
    pub fn setquery_step(&mut self, g: &DenseMatrix, h: &[f64], query: &[usize]) -> Result<Vec<f64>, AdaptiveError> {
        let Mode::SetQuery { k } = self.mode else {
            return Err(AdaptiveError::WrongMode("set-query"));
        };
        if query.len() != k {
            return Err(AdaptiveError::CardinalityMismatch { expected: k, found: query.len() });
        }
        let sampled = self.begin_step(g, h)?;
        let mut columns = vec![Vec::with_capacity(sampled.len()); k];
        for &i in &sampled {
            let vs = self.copies[i].query_set(query)?;
            for (col, v) in columns.iter_mut().zip(vs) {
                col.push(self.to_grid(v)?);
            }
        }
        self.counters.inner_queries += sampled.len();
        let mut u = Vec::with_capacity(k);
        let mut slack = Vec::with_capacity(k);
        for col in &columns {
            let (x, s) = self.aggregate(col)?;
            u.push(x);
            slack.push(s);
        }
        self.finish(u.clone(), Some(query.to_vec()), sampled, slack);
        Ok(u)
    }
}
