//! Dynamic maintenance of `Bᵀ(BBᵀ)⁻¹B` for `B = A (W^{1/2} ⊗ W^{1/2})` when
//! every weight `W = U diag(λ) Uᵀ` shares the eigenbasis `U`.
//!
//! The structure keeps `M = Gᵀ(G(Λ⊗Λ)Gᵀ)⁻¹G` with `G = A(U⊗U)`, batches
//! eigenvalue changes lazily and folds them into `M` with low-rank Woodbury
//! corrections. Queries are answered against a pool of sketches `R_l` and
//! return `P̃ R_lᵀ R_l h`, where `P̃` is the projection at the approximate
//! spectrum `λ̃` handed back by the last update.

mod constraints;
mod snapshot;
mod threshold;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::derive_seed;
use crate::kronlinalg::{
    inverse_guarded, kron_apply, kron_diag, solve_spd, sym_eigen, DenseMatrix, EigenWeight, LinalgError,
};
use crate::oracle;
use crate::sketch::{Sketch, SketchBatch, SketchError, SketchFamily};

pub use constraints::ConstraintBatch;
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};
pub use threshold::{expand_index_set, soft_threshold, Thresholded};

/// Tolerance on `‖U_new − U‖_max` for updates.
pub const BASIS_TOL: f64 = 1e-10;
/// Relative eigenvalue floor: `eig_floor = EIG_FLOOR_REL · max(max λ, 1)`.
pub const EIG_FLOOR_REL: f64 = 1e-12;
/// Largest supported `n` (M is stored densely as `n² x n²`).
pub const MAX_N: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaintError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constraints are rank deficient ({rank} independent of {m})")]
    RankDeficient { m: usize, rank: usize },
    #[error("update basis differs from the maintained basis by {0:e}")]
    BasisMismatch(f64),
    #[error("non-finite eigenvalue in update")]
    NonFinite,
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sketch pool exhausted and regeneration is disabled")]
    PoolExhausted,
}

impl From<oracle::OracleError> for MaintError {
    fn from(e: oracle::OracleError) -> Self {
        match e {
            oracle::OracleError::Linalg(l) => MaintError::Linalg(l),
            oracle::OracleError::IndexOutOfRange { index, len } => MaintError::IndexOutOfRange { index, n: len },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaintConfig {
    /// Accuracy parameter in `(0, 0.1)`.
    pub eps_mp: f64,
    /// Lazy-update exponent `a ∈ (0, 1)`: updates touching fewer than `n^a`
    /// coordinates are deferred.
    pub a_exp: f64,
    pub family: SketchFamily,
    /// Number of sketches in the pool.
    pub s: usize,
    /// Sketch dimension.
    pub b: usize,
    pub seed: u64,
    /// Rebuild `M` from scratch after this many updates (0 disables).
    pub recompute_every: usize,
    /// Regenerate the pool when every sketch has been used once.
    pub regenerate_on_exhaust: bool,
}

impl Default for MaintConfig {
    fn default() -> Self {
        Self {
            eps_mp: 0.05,
            a_exp: 0.5,
            family: SketchFamily::Gaussian,
            s: 8,
            b: 64,
            seed: 0,
            recompute_every: 256,
            regenerate_on_exhaust: true,
        }
    }
}

impl MaintConfig {
    fn validate(&self) -> Result<(), MaintError> {
        if !(self.eps_mp > 0.0 && self.eps_mp < 0.1) {
            return Err(MaintError::InvalidParameter(format!("eps_mp = {} not in (0, 0.1)", self.eps_mp)));
        }
        if !(self.a_exp > 0.0 && self.a_exp < 1.0) {
            return Err(MaintError::InvalidParameter(format!("a_exp = {} not in (0, 1)", self.a_exp)));
        }
        if self.s == 0 || self.b == 0 {
            return Err(MaintError::InvalidParameter("pool size s and sketch dimension b must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub updates: usize,
    pub lazy_updates: usize,
    /// Rank `|S̃|` of each update (0 for lazy updates and full rebuilds).
    pub woodbury_ranks: Vec<usize>,
    pub full_recomputes: usize,
    pub queries: usize,
    pub pool_regenerations: usize,
    /// Queries whose capacitance solve failed and used a rebuilt `M` at `λ̃`.
    pub query_fallbacks: usize,
}

/// Everything a query produced, for callers that want to check it.
#[derive(Debug, Clone)]
pub struct QueryOutput {
    pub p_l: Vec<f64>,
    pub p_g: Vec<f64>,
    pub sketch_index: usize,
    pub sketch: Sketch,
}

/// Outcome of an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Lazy,
    Woodbury,
    FullRecompute,
}

#[derive(Debug, Clone)]
pub struct MaintainedProjection {
    cfg: MaintConfig,
    constraints: ConstraintBatch,
    basis: DenseMatrix,
    g: DenseMatrix,
    lam: Vec<f64>,
    lam_tilde: Vec<f64>,
    m_mat: DenseMatrix,
    q_mat: DenseMatrix,
    p_mat: DenseMatrix,
    pool: SketchBatch,
    /// `(Uᵀ⊗Uᵀ) 𝖱ᵀ`, `n² x (s·b)`.
    rot_rt: DenseMatrix,
    pool_generation: u64,
    cursor: usize,
    eig_floor: f64,
    rank_since_build: usize,
    updates_since_build: usize,
    last_kind: Option<UpdateKind>,
    last_p_g: Option<Vec<f64>>,
    counters: Counters,
}

impl MaintainedProjection {
    /// Factorizes `W`, rotates the constraints into its eigenbasis and builds
    /// `M`, the sketch pool, `Q` and `P`.
    pub fn init(constraints: ConstraintBatch, w: &DenseMatrix, cfg: MaintConfig) -> Result<Self, MaintError> {
        let eig = sym_eigen(w)?;
        Self::init_from_eigen(constraints, &eig, cfg)
    }

    pub fn init_from_eigen(constraints: ConstraintBatch, eig: &EigenWeight, cfg: MaintConfig) -> Result<Self, MaintError> {
        cfg.validate()?;
        let n = constraints.n();
        if eig.dim() != n {
            return Err(MaintError::LengthMismatch { expected: n, found: eig.dim() });
        }
        if n > MAX_N {
            return Err(MaintError::InvalidParameter(format!("n = {n} exceeds the dense limit {MAX_N}")));
        }
        let max_lam = eig.eigvals().iter().cloned().fold(0.0, f64::max);
        let eig_floor = EIG_FLOOR_REL * max_lam.max(1.0);
        let lam: Vec<f64> = eig.eigvals().iter().map(|&v| v.max(eig_floor)).collect();
        let basis = eig.basis().clone();
        let g = rotate_constraints(&constraints, &basis)?;
        let pool = SketchBatch::generate(cfg.family, cfg.s, cfg.b, n * n, derive_seed(cfg.seed, 0))?;
        let mut this = Self {
            m_mat: DenseMatrix::zeros(0, 0),
            q_mat: DenseMatrix::zeros(0, 0),
            p_mat: DenseMatrix::zeros(0, 0),
            rot_rt: DenseMatrix::zeros(0, 0),
            lam_tilde: lam.clone(),
            lam,
            cfg,
            constraints,
            basis,
            g,
            pool,
            pool_generation: 0,
            cursor: 0,
            eig_floor,
            rank_since_build: 0,
            updates_since_build: 0,
            last_kind: None,
            last_p_g: None,
            counters: Counters::default(),
        };
        this.m_mat = this.build_m(&this.lam)?;
        this.rot_rt = this.rotated_pool()?;
        this.rebuild_q_p();
        Ok(this)
    }

    pub fn n(&self) -> usize {
        self.constraints.n()
    }

    pub fn m(&self) -> usize {
        self.constraints.m()
    }

    pub fn config(&self) -> &MaintConfig {
        &self.cfg
    }

    pub fn constraints(&self) -> &ConstraintBatch {
        &self.constraints
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// `G = A (U ⊗ U)`.
    pub fn rotated_constraints(&self) -> &DenseMatrix {
        &self.g
    }

    /// Maintained spectrum `λ`.
    pub fn lam(&self) -> &[f64] {
        &self.lam
    }

    /// Query-time spectrum `λ̃`.
    pub fn lam_tilde(&self) -> &[f64] {
        &self.lam_tilde
    }

    pub fn eig_floor(&self) -> f64 {
        self.eig_floor
    }

    /// `M = Gᵀ(G(Λ⊗Λ)Gᵀ)⁻¹G` at the maintained `λ`.
    pub fn m_matrix(&self) -> &DenseMatrix {
        &self.m_mat
    }

    pub fn q_matrix(&self) -> &DenseMatrix {
        &self.q_mat
    }

    pub fn p_matrix(&self) -> &DenseMatrix {
        &self.p_mat
    }

    pub fn pool(&self) -> &SketchBatch {
        &self.pool
    }

    pub fn pool_generation(&self) -> u64 {
        self.pool_generation
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn last_update_kind(&self) -> Option<UpdateKind> {
        self.last_kind
    }

    /// `p_g` of the most recent query (the Woodbury correction term).
    pub fn last_p_g(&self) -> Option<&[f64]> {
        self.last_p_g.as_deref()
    }

    /// `W̃ = U diag(λ̃) Uᵀ`.
    pub fn approx_weight(&self) -> DenseMatrix {
        let ud = self.basis.scale_cols(&self.lam_tilde);
        ud.matmul(&self.basis.transpose()).expect("square")
    }

    fn build_m(&self, lam: &[f64]) -> Result<DenseMatrix, MaintError> {
        let d = kron_diag(lam, lam);
        let gd = self.g.scale_cols(&d);
        let gram = gd.matmul(&self.g.transpose())?;
        let x = solve_spd(&gram, &self.g)?;
        let mut m = self.g.t_matmul(&x)?;
        m.symmetrize();
        Ok(m)
    }

    fn rotated_pool(&self) -> Result<DenseMatrix, MaintError> {
        let n = self.n();
        let ut = self.basis.transpose();
        let stacked = self.pool.stacked_dense();
        let cols = stacked.rows();
        let mut out = DenseMatrix::zeros(n * n, cols);
        for c in 0..cols {
            let col = kron_apply(&ut, &ut, stacked.row(c))?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, c)] = v;
            }
        }
        Ok(out)
    }

    /// `(U⊗U) x` applied column by column.
    fn lift_columns(&self, x: &DenseMatrix) -> DenseMatrix {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n * n, x.cols());
        for c in 0..x.cols() {
            let col = kron_apply(&self.basis, &self.basis, &x.column(c)).expect("n² rows");
            for (i, v) in col.into_iter().enumerate() {
                out[(i, c)] = v;
            }
        }
        out
    }

    fn half_diag(lam: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = lam.iter().map(|v| v.sqrt()).collect();
        kron_diag(&s, &s)
    }

    /// `Q = M (Λ^{1/2}⊗Λ^{1/2}) (Uᵀ⊗Uᵀ) 𝖱ᵀ`, `P = (U⊗U)(Λ^{1/2}⊗Λ^{1/2}) Q`.
    fn rebuild_q_p(&mut self) {
        let d = Self::half_diag(&self.lam);
        self.q_mat = self.m_mat.matmul(&self.rot_rt.scale_rows(&d)).expect("conforming");
        self.p_mat = self.lift_columns(&self.q_mat.scale_rows(&d));
    }

    fn regenerate_pool(&mut self) -> Result<(), MaintError> {
        self.pool_generation += 1;
        let n = self.n();
        self.pool = SketchBatch::generate(
            self.cfg.family,
            self.cfg.s,
            self.cfg.b,
            n * n,
            derive_seed(self.cfg.seed, self.pool_generation),
        )?;
        self.rot_rt = self.rotated_pool()?;
        self.cursor = 0;
        self.counters.pool_regenerations += 1;
        Ok(())
    }

    fn full_rebuild(&mut self, lam_hat: Vec<f64>) -> Result<(), MaintError> {
        self.m_mat = self.build_m(&lam_hat)?;
        self.lam = lam_hat;
        self.rebuild_q_p();
        self.rank_since_build = 0;
        self.updates_since_build = 0;
        self.counters.full_recomputes += 1;
        Ok(())
    }

    fn check_basis(&self, other: &DenseMatrix) -> Result<(), MaintError> {
        if other.shape() != self.basis.shape() {
            return Err(MaintError::BasisMismatch(f64::INFINITY));
        }
        let dev = other.sub(&self.basis)?.max_abs();
        if dev > BASIS_TOL {
            return Err(MaintError::BasisMismatch(dev));
        }
        Ok(())
    }

    /// Applies `W_new = U diag(λ_new) Uᵀ` and returns `λ̃`, the spectrum of the
    /// weight that subsequent queries are exact for.
    pub fn update(&mut self, w_new: &EigenWeight) -> Result<Vec<f64>, MaintError> {
        self.check_basis(w_new.basis())?;
        self.update_eigvals(w_new.eigvals())
    }

    /// [`MaintainedProjection::update`] with the eigenvalues given directly in
    /// the maintained basis.
    pub fn update_eigvals(&mut self, lam_new: &[f64]) -> Result<Vec<f64>, MaintError> {
        let n = self.n();
        if lam_new.len() != n {
            return Err(MaintError::LengthMismatch { expected: n, found: lam_new.len() });
        }
        if lam_new.iter().any(|v| !v.is_finite()) {
            return Err(MaintError::NonFinite);
        }
        let lam_new: Vec<f64> = lam_new.iter().map(|&v| v.max(self.eig_floor)).collect();
        let half_eps = self.cfg.eps_mp / 2.0;
        let r = lam_new
            .iter()
            .zip(&self.lam)
            .filter(|(a, b)| (a.ln() - b.ln()).abs() >= half_eps)
            .count();

        self.counters.updates += 1;
        self.updates_since_build += 1;
        let kind = if (r as f64) < (n as f64).powf(self.cfg.a_exp) {
            self.counters.lazy_updates += 1;
            self.counters.woodbury_ranks.push(0);
            UpdateKind::Lazy
        } else {
            let lam_hat = soft_threshold(&self.lam, &lam_new, r)?.lam_hat;
            self.apply_change(lam_hat)?
        };
        self.last_kind = Some(kind);

        self.lam_tilde = lam_new
            .iter()
            .zip(&self.lam)
            .map(|(&ln, &lh)| if (ln.ln() - lh.ln()).abs() <= half_eps { lh } else { ln })
            .collect();
        if cfg!(debug_assertions) && n <= 8 {
            self.check_invariants(1e-7).map_err(MaintError::InvalidParameter)?;
        }
        Ok(self.lam_tilde.clone())
    }

    /// Folds `λ → λ̂` into `M`, `Q` and `P`, regenerating the sketch pool.
    fn apply_change(&mut self, lam_hat: Vec<f64>) -> Result<UpdateKind, MaintError> {
        let n = self.n();
        let c: Vec<f64> = lam_hat.iter().zip(&self.lam).map(|(a, b)| a - b).collect();
        let support: Vec<usize> = (0..n).filter(|&i| c[i] != 0.0).collect();
        self.regenerate_pool()?;
        if support.is_empty() {
            self.rebuild_q_p();
            self.counters.woodbury_ranks.push(0);
            return Ok(UpdateKind::Woodbury);
        }
        let (s_tilde, delta) = change_block(&self.lam, &lam_hat, &support)?;

        let over_budget = self.rank_since_build + s_tilde.len() > n * n;
        let due = self.cfg.recompute_every > 0 && self.updates_since_build >= self.cfg.recompute_every;
        if over_budget || due || s_tilde.is_empty() {
            self.counters.woodbury_ranks.push(0);
            self.full_rebuild(lam_hat)?;
            return Ok(UpdateKind::FullRecompute);
        }
        let m_new = match woodbury_correct(&self.m_mat, &s_tilde, &delta) {
            Ok(m) => m,
            Err(MaintError::Linalg(LinalgError::IllConditioned { .. })) => {
                self.counters.woodbury_ranks.push(0);
                self.full_rebuild(lam_hat)?;
                return Ok(UpdateKind::FullRecompute);
            }
            Err(e) => return Err(e),
        };

        // Q and P for the freshly drawn pool at the old spectrum.
        self.rebuild_q_p();
        let d_old = Self::half_diag(&self.lam);
        let d_new = Self::half_diag(&lam_hat);
        let gamma: Vec<f64> = d_new.iter().zip(&d_old).map(|(a, b)| a - b).collect();
        let dm = m_new.sub(&self.m_mat)?;
        // Q ← Q + M_new Γ (Uᵀ⊗Uᵀ)𝖱ᵀ + (M_new − M)(Λ^{1/2}⊗Λ^{1/2})(Uᵀ⊗Uᵀ)𝖱ᵀ
        let q_new = self
            .q_mat
            .add(&m_new.matmul(&self.rot_rt.scale_rows(&gamma))?)?
            .add(&dm.matmul(&self.rot_rt.scale_rows(&d_old))?)?;
        // P ← P + (U⊗U) Γ Q_new + (U⊗U)(Λ^{1/2}⊗Λ^{1/2})(Q_new − Q)
        let dq = q_new.sub(&self.q_mat)?;
        let p_new = self
            .p_mat
            .add(&self.lift_columns(&q_new.scale_rows(&gamma)))?
            .add(&self.lift_columns(&dq.scale_rows(&d_old)))?;

        self.m_mat = m_new;
        self.q_mat = q_new;
        self.p_mat = p_new;
        self.lam = lam_hat;
        self.rank_since_build += s_tilde.len();
        self.counters.woodbury_ranks.push(s_tilde.len());
        Ok(UpdateKind::Woodbury)
    }

    /// Returns `p_l = P̃ R_lᵀ R_l h` using the next unused sketch `R_l`.
    pub fn query(&mut self, h: &[f64]) -> Result<Vec<f64>, MaintError> {
        Ok(self.query_detailed(h)?.p_l)
    }

    pub fn query_detailed(&mut self, h: &[f64]) -> Result<QueryOutput, MaintError> {
        let n = self.n();
        let nn = n * n;
        if h.len() != nn {
            return Err(MaintError::LengthMismatch { expected: nn, found: h.len() });
        }
        if self.cursor >= self.pool.len() {
            if !self.cfg.regenerate_on_exhaust {
                return Err(MaintError::PoolExhausted);
            }
            self.regenerate_pool()?;
            self.rebuild_q_p();
        }
        let l = self.cursor;
        let b = self.cfg.b;
        let sketch = self.pool.sketch(l).clone();
        let z = sketch.apply(h)?;

        // (Uᵀ⊗Uᵀ) R_lᵀ z and Q_{*,l} z
        let rot_block = self.rot_rt.col_block(l * b, b);
        let rot_vec = rot_block.matvec(&z)?;
        let q_block = self.q_mat.col_block(l * b, b);
        let q_z = q_block.matvec(&z)?;

        let d_old = Self::half_diag(&self.lam);
        let d_tilde = Self::half_diag(&self.lam_tilde);
        let gamma: Vec<f64> = d_tilde.iter().zip(&d_old).map(|(a, b)| a - b).collect();
        let gamma_rot: Vec<f64> = gamma.iter().zip(&rot_vec).map(|(g, r)| g * r).collect();
        let m_gamma = self.m_mat.matvec(&gamma_rot)?;
        let inner: Vec<f64> = q_z.iter().zip(&m_gamma).map(|(a, b)| a + b).collect();

        let support: Vec<usize> = (0..n).filter(|&i| self.lam_tilde[i] != self.lam[i]).collect();
        let mut core_g = vec![0.0; nn];
        if !support.is_empty() {
            let (s_tilde, delta) = change_block(&self.lam, &self.lam_tilde, &support)?;
            if !s_tilde.is_empty() {
                let t: Vec<f64> = s_tilde.iter().map(|&k| inner[k]).collect();
                match capacitance_apply(&self.m_mat, &s_tilde, &delta, &t) {
                    Ok(w) => {
                        let m_cols = self.m_mat.select_cols(&s_tilde);
                        core_g = m_cols.matvec(&w)?;
                    }
                    Err(MaintError::Linalg(LinalgError::IllConditioned { .. })) => {
                        // M at λ̃ directly: M_tilde (Λ̃^{1/2}⊗Λ̃^{1/2}) rot_vec == inner − core_g
                        self.counters.query_fallbacks += 1;
                        let m_tilde = self.build_m(&self.lam_tilde)?;
                        let direct: Vec<f64> = d_tilde.iter().zip(&rot_vec).map(|(d, r)| d * r).collect();
                        let want = m_tilde.matvec(&direct)?;
                        core_g = inner.iter().zip(&want).map(|(a, b)| a - b).collect();
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        let lift = |v: &[f64]| -> Result<Vec<f64>, MaintError> {
            let scaled: Vec<f64> = v.iter().zip(&d_tilde).map(|(a, d)| a * d).collect();
            Ok(kron_apply(&self.basis, &self.basis, &scaled)?)
        };
        let p_full = lift(&inner)?;
        let p_g = lift(&core_g)?;
        let p_l: Vec<f64> = p_full.iter().zip(&p_g).map(|(a, b)| a - b).collect();

        self.cursor += 1;
        self.counters.queries += 1;
        if self.cursor >= self.pool.len() && self.cfg.regenerate_on_exhaust {
            self.regenerate_pool()?;
            self.rebuild_q_p();
        }
        self.last_p_g = Some(p_g.clone());
        Ok(QueryOutput { p_l, p_g, sketch_index: l, sketch })
    }

    /// Unsketched reference: `P̃ h` with `P̃` materialized at `λ̃`.
    pub fn query_exactish(&self, h: &[f64]) -> Result<Vec<f64>, MaintError> {
        let nn = self.n() * self.n();
        if h.len() != nn {
            return Err(MaintError::LengthMismatch { expected: nn, found: h.len() });
        }
        let p = oracle::exact_projection_eigen(&self.constraints, &self.basis, &self.lam_tilde)?;
        Ok(p.matvec(h)?)
    }

    /// Checks symmetry of `M`, `M(Λ⊗Λ)M = M`, and the `λ̃` invariants.
    pub fn check_invariants(&self, rel_tol: f64) -> Result<(), String> {
        let fro = self.m_mat.frobenius_norm().max(f64::MIN_POSITIVE);
        let asym = self.m_mat.sub(&self.m_mat.transpose()).map_err(|e| e.to_string())?.frobenius_norm();
        if asym > rel_tol * fro {
            return Err(format!("M not symmetric: {asym:e} vs {fro:e}"));
        }
        let d = kron_diag(&self.lam, &self.lam);
        let mdm = self.m_mat.scale_cols(&d).matmul(&self.m_mat).map_err(|e| e.to_string())?;
        let dev = mdm.sub(&self.m_mat).map_err(|e| e.to_string())?.frobenius_norm();
        if dev > rel_tol * fro {
            return Err(format!("M(Λ⊗Λ)M ≠ M: {dev:e} vs {fro:e}"));
        }
        if self.lam.iter().any(|&v| v < self.eig_floor) {
            return Err("λ below eigenvalue floor".into());
        }
        if self.cursor >= self.pool.len() && self.cfg.regenerate_on_exhaust {
            return Err("cursor out of range".into());
        }
        Ok(())
    }

    /// Serializable state sufficient to resume.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            config: self.cfg.clone(),
            constraints: self.constraints.clone(),
            basis: self.basis.clone(),
            lam: self.lam.clone(),
            lam_tilde: self.lam_tilde.clone(),
            eig_floor: self.eig_floor,
            pool_generation: self.pool_generation,
            cursor: self.cursor,
            rank_since_build: self.rank_since_build,
            updates_since_build: self.updates_since_build,
            counters: self.counters.clone(),
        }
    }

    /// Rebuilds the structure from a snapshot. `M`, `Q` and `P` are recomputed
    /// from scratch at the stored spectrum, and the pool is regenerated from its
    /// recorded generation.
    pub fn restore(snap: &Snapshot) -> Result<Self, MaintError> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(MaintError::InvalidParameter(format!("unsupported snapshot version {}", snap.version)));
        }
        snap.config.validate()?;
        let n = snap.constraints.n();
        if snap.lam.len() != n || snap.lam_tilde.len() != n || snap.basis.shape() != (n, n) {
            return Err(MaintError::InvalidParameter("snapshot dimensions disagree".into()));
        }
        EigenWeight::new(snap.basis.clone(), snap.lam.clone())?;
        let g = rotate_constraints(&snap.constraints, &snap.basis)?;
        let pool = SketchBatch::generate(
            snap.config.family,
            snap.config.s,
            snap.config.b,
            n * n,
            derive_seed(snap.config.seed, snap.pool_generation),
        )?;
        let mut this = Self {
            cfg: snap.config.clone(),
            constraints: snap.constraints.clone(),
            basis: snap.basis.clone(),
            g,
            lam: snap.lam.clone(),
            lam_tilde: snap.lam_tilde.clone(),
            m_mat: DenseMatrix::zeros(0, 0),
            q_mat: DenseMatrix::zeros(0, 0),
            p_mat: DenseMatrix::zeros(0, 0),
            pool,
            rot_rt: DenseMatrix::zeros(0, 0),
            pool_generation: snap.pool_generation,
            cursor: snap.cursor,
            eig_floor: snap.eig_floor,
            rank_since_build: snap.rank_since_build,
            updates_since_build: snap.updates_since_build,
            last_kind: None,
            last_p_g: None,
            counters: snap.counters.clone(),
        };
        this.m_mat = this.build_m(&this.lam)?;
        this.rot_rt = this.rotated_pool()?;
        this.rebuild_q_p();
        Ok(this)
    }
}

/// Rows `vec(Uᵀ A_i U)ᵀ`, i.e. `A (U ⊗ U)` without forming `U ⊗ U`.
fn rotate_constraints(constraints: &ConstraintBatch, basis: &DenseMatrix) -> Result<DenseMatrix, MaintError> {
    let n = constraints.n();
    let ut = basis.transpose();
    let mut g = DenseMatrix::zeros(constraints.m(), n * n);
    for i in 0..constraints.m() {
        let rotated = kron_apply(&ut, &ut, constraints.matrix().row(i))?;
        g.row_mut(i).copy_from_slice(&rotated);
    }
    Ok(g)
}

/// Kronecker positions touched by `λ → λ'` on `support`, with the diagonal
/// `Δ = λ'⊗λ' − λ⊗λ` restricted to them. Exact zeros are dropped.
fn change_block(lam: &[f64], lam_new: &[f64], support: &[usize]) -> Result<(Vec<usize>, Vec<f64>), MaintError> {
    let n = lam.len();
    let mut keep = Vec::new();
    let mut delta = Vec::new();
    for k in expand_index_set(support, n)? {
        let (i, j) = (k / n, k % n);
        let d = lam[i] * (lam_new[j] - lam[j]) + (lam_new[i] - lam[i]) * lam[j] + (lam_new[i] - lam[i]) * (lam_new[j] - lam[j]);
        if d != 0.0 {
            keep.push(k);
            delta.push(d);
        }
    }
    Ok((keep, delta))
}

/// `(Δ⁻¹ + M_SS)⁻¹ t`, evaluated as `(I + Δ M_SS)⁻¹ Δ t` so that `Δ` is never
/// inverted.
fn capacitance_apply(m: &DenseMatrix, s: &[usize], delta: &[f64], t: &[f64]) -> Result<Vec<f64>, MaintError> {
    let k = s.len();
    let mut cap = m.select(s, s).scale_rows(delta);
    for i in 0..k {
        cap[(i, i)] += 1.0;
    }
    let inv = inverse_guarded(&cap, "capacitance")?;
    let dt: Vec<f64> = delta.iter().zip(t).map(|(d, x)| d * x).collect();
    Ok(inv.matvec(&dt)?)
}

/// `M − M_{*,S}(Δ⁻¹ + M_SS)⁻¹ M_{S,*}`.
fn woodbury_correct(m: &DenseMatrix, s: &[usize], delta: &[f64]) -> Result<DenseMatrix, MaintError> {
    let k = s.len();
    let mut cap = m.select(s, s).scale_rows(delta);
    for i in 0..k {
        cap[(i, i)] += 1.0;
    }
    let inv = inverse_guarded(&cap, "capacitance")?;
    let m_rows = m.select_rows(s);
    let right = inv.matmul(&m_rows.scale_rows(delta))?;
    let correction = m_rows.t_matmul(&right)?;
    let mut out = m.sub(&correction)?;
    out.symmetrize();
    Ok(out)
}

#[cfg(test)]
mod tests;
