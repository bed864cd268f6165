//! Random sketching matrices `R ∈ R^{b×n}` from five families, plus an
//! empirical estimator of their coordinate-wise embedding behaviour.

mod ce;
mod fwht;
mod hash;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::{derive_seed, rng_from_seed};
use crate::kronlinalg::DenseMatrix;

pub use ce::{ce_estimate, ce_estimate_pair, CeReport, DEFAULT_CE_DELTA};
pub use fwht::fwht_in_place;
pub use hash::{PolyHash, MERSENNE_61};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("invalid sketch parameter: {0}")]
    InvalidParameter(String),
    #[error("input length {found} does not match sketch dimension {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum SketchFamily {
    Gaussian,
    Srht,
    Ams,
    CountSketch,
    /// Each column has `sparsity` nonzeros of magnitude `1/√sparsity`, one per
    /// block of `b / sparsity` rows.
    SparseEmbedding { sparsity: usize },
}

impl SketchFamily {
    pub const ALL_DEFAULT: [SketchFamily; 5] = [
        SketchFamily::Gaussian,
        SketchFamily::Srht,
        SketchFamily::Ams,
        SketchFamily::CountSketch,
        SketchFamily::SparseEmbedding { sparsity: 4 },
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SketchFamily::Gaussian => "gaussian",
            SketchFamily::Srht => "srht",
            SketchFamily::Ams => "ams",
            SketchFamily::CountSketch => "count_sketch",
            SketchFamily::SparseEmbedding { .. } => "sparse_embedding",
        }
    }

    /// Parses `gaussian`, `srht`, `ams`, `count_sketch`, `sparse_embedding`
    /// (sparsity 4) or `sparse_embedding:<s>`.
    pub fn parse(s: &str) -> Result<Self, SketchError> {
        let lower = s.trim().to_ascii_lowercase();
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h.to_string(), Some(a.to_string())),
            None => (lower.clone(), None),
        };
        match (head.as_str(), arg) {
            ("gaussian", None) => Ok(Self::Gaussian),
            ("srht", None) => Ok(Self::Srht),
            ("ams", None) => Ok(Self::Ams),
            ("count_sketch" | "countsketch", None) => Ok(Self::CountSketch),
            ("sparse_embedding" | "sparse", None) => Ok(Self::SparseEmbedding { sparsity: 4 }),
            ("sparse_embedding" | "sparse", Some(a)) => a
                .parse()
                .map(|sparsity| Self::SparseEmbedding { sparsity })
                .map_err(|_| SketchError::InvalidParameter(format!("bad sparsity in {s:?}"))),
            _ => Err(SketchError::InvalidParameter(format!("unknown sketch family {s:?}"))),
        }
    }

    fn validate(&self, b: usize) -> Result<(), SketchError> {
        if let SketchFamily::SparseEmbedding { sparsity } = *self {
            if sparsity == 0 || b % sparsity != 0 {
                return Err(SketchError::InvalidParameter(format!(
                    "sparsity {sparsity} must be >= 1 and divide b = {b}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(DenseMatrix),
    /// Column `i` holds `per_col` entries at `rows[i * per_col + k]`.
    Hashed { per_col: usize, rows: Vec<u32>, vals: Vec<f64> },
    Srht { n_pad: usize, signs: Vec<f64>, picks: Vec<usize> },
}

/// One sampled sketching matrix. Immutable after generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    family: SketchFamily,
    b: usize,
    n: usize,
    seed: u64,
    repr: Repr,
}

impl Sketch {
    /// Samples `R` deterministically from `(family, b, n, seed)`.
    pub fn generate(family: SketchFamily, b: usize, n: usize, seed: u64) -> Result<Self, SketchError> {
        if b == 0 || n == 0 {
            return Err(SketchError::InvalidParameter(format!("b = {b}, n = {n} must be >= 1")));
        }
        family.validate(b)?;
        let mut rng = rng_from_seed(seed);
        let scale = 1.0 / (b as f64).sqrt();
        let repr = match family {
            SketchFamily::Gaussian => {
                let mut data = Vec::with_capacity(b * n);
                for _ in 0..b * n {
                    data.push(rng.sample::<f64, _>(StandardNormal) * scale);
                }
                Repr::Dense(DenseMatrix::from_row_major(b, n, data).expect("finite normals"))
            }
            SketchFamily::Ams => {
                let hashes: Vec<PolyHash> = (0..b).map(|_| PolyHash::new(&mut rng, 4)).collect();
                let mut data = Vec::with_capacity(b * n);
                for h in &hashes {
                    data.extend((0..n as u64).map(|j| h.sign(j) * scale));
                }
                Repr::Dense(DenseMatrix::from_row_major(b, n, data).expect("finite"))
            }
            SketchFamily::CountSketch => {
                let bucket = PolyHash::new(&mut rng, 2);
                let sign = PolyHash::new(&mut rng, 4);
                let rows = (0..n as u64).map(|i| bucket.bucket(i, b) as u32).collect();
                let vals = (0..n as u64).map(|i| sign.sign(i)).collect();
                Repr::Hashed { per_col: 1, rows, vals }
            }
            SketchFamily::SparseEmbedding { sparsity } => {
                let block = b / sparsity;
                let bucket = PolyHash::new(&mut rng, 2);
                let sign = PolyHash::new(&mut rng, 4);
                let mag = 1.0 / (sparsity as f64).sqrt();
                let mut rows = Vec::with_capacity(n * sparsity);
                let mut vals = Vec::with_capacity(n * sparsity);
                for i in 0..n as u64 {
                    for j in 0..sparsity as u64 {
                        let key = i * sparsity as u64 + j;
                        rows.push((j as usize * block + bucket.bucket(key, block)) as u32);
                        vals.push(sign.sign(key) * mag);
                    }
                }
                Repr::Hashed { per_col: sparsity, rows, vals }
            }
            SketchFamily::Srht => {
                let n_pad = n.next_power_of_two();
                let signs = (0..n_pad).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                let picks = if b <= n_pad {
                    sample(&mut rng, n_pad, b).into_vec()
                } else {
                    (0..b).map(|_| rng.random_range(0..n_pad)).collect()
                };
                Repr::Srht { n_pad, signs, picks }
            }
        };
        Ok(Self { family, b, n, seed, repr })
    }

    pub fn family(&self) -> SketchFamily {
        self.family
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Padded ambient dimension for SRHT (`n` for other families).
    pub fn padded_dim(&self) -> usize {
        match &self.repr {
            Repr::Srht { n_pad, .. } => *n_pad,
            _ => self.n,
        }
    }

    /// `R x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SketchError> {
        if x.len() != self.n {
            return Err(SketchError::LengthMismatch { expected: self.n, found: x.len() });
        }
        Ok(match &self.repr {
            Repr::Dense(m) => m.matvec(x).expect("checked length"),
            Repr::Hashed { per_col, rows, vals } => {
                let mut out = vec![0.0; self.b];
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    for k in i * per_col..(i + 1) * per_col {
                        out[rows[k] as usize] += vals[k] * xi;
                    }
                }
                out
            }
            Repr::Srht { picks, .. } => {
                let rotated = self.srht_rotate(x)?;
                let scale = (rotated.len() as f64 / self.b as f64).sqrt();
                picks.iter().map(|&p| rotated[p] * scale).collect()
            }
        })
    }

    /// `Rᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>, SketchError> {
        if y.len() != self.b {
            return Err(SketchError::LengthMismatch { expected: self.b, found: y.len() });
        }
        Ok(match &self.repr {
            Repr::Dense(m) => m.t_matvec(y).expect("checked length"),
            Repr::Hashed { per_col, rows, vals } => (0..self.n)
                .map(|i| (i * per_col..(i + 1) * per_col).map(|k| vals[k] * y[rows[k] as usize]).sum())
                .collect(),
            Repr::Srht { n_pad, signs, picks } => {
                let scale = (*n_pad as f64 / self.b as f64).sqrt() / (*n_pad as f64).sqrt();
                let mut buf = vec![0.0; *n_pad];
                for (&p, &yi) in picks.iter().zip(y) {
                    buf[p] += yi;
                }
                fwht_in_place(&mut buf);
                (0..self.n).map(|i| buf[i] * scale * signs[i]).collect()
            }
        })
    }

    /// `Rᵀ R x`.
    pub fn gram_apply(&self, x: &[f64]) -> Result<Vec<f64>, SketchError> {
        self.apply_transpose(&self.apply(x)?)
    }

    /// The normalized rotation `H D x` on the zero-padded input (SRHT only).
    /// `H` is scaled so the operator is orthogonal.
    pub fn srht_rotate(&self, x: &[f64]) -> Result<Vec<f64>, SketchError> {
        let Repr::Srht { n_pad, signs, .. } = &self.repr else {
            return Err(SketchError::InvalidParameter("srht_rotate on a non-SRHT sketch".into()));
        };
        if x.len() != self.n {
            return Err(SketchError::LengthMismatch { expected: self.n, found: x.len() });
        }
        let mut buf = vec![0.0; *n_pad];
        for (i, &xi) in x.iter().enumerate() {
            buf[i] = xi * signs[i];
        }
        fwht_in_place(&mut buf);
        let norm = 1.0 / (*n_pad as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= norm);
        Ok(buf)
    }

    /// Materializes `R` as a dense `b x n` matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            _ => {
                let mut out = DenseMatrix::zeros(self.b, self.n);
                let mut e = vec![0.0; self.n];
                for j in 0..self.n {
                    e[j] = 1.0;
                    let col = self.apply(&e).expect("length n");
                    for (i, v) in col.into_iter().enumerate() {
                        out[(i, j)] = v;
                    }
                    e[j] = 0.0;
                }
                out
            }
        }
    }
}

/// `s` sketches of shape `b x n` drawn from one base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchBatch {
    family: SketchFamily,
    b: usize,
    n: usize,
    seed: u64,
    sketches: Vec<Sketch>,
}

impl SketchBatch {
    pub fn generate(family: SketchFamily, s: usize, b: usize, n: usize, seed: u64) -> Result<Self, SketchError> {
        if s == 0 {
            return Err(SketchError::InvalidParameter("pool size s must be >= 1".into()));
        }
        let sketches = (0..s)
            .map(|l| Sketch::generate(family, b, n, derive_seed(seed, l as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { family, b, n, seed, sketches })
    }

    pub fn len(&self) -> usize {
        self.sketches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sketches.is_empty()
    }

    pub fn family(&self) -> SketchFamily {
        self.family
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sketch(&self, l: usize) -> &Sketch {
        &self.sketches[l]
    }

    /// Stacked `(s·b) x n` matrix `[R_1; …; R_s]`.
    pub fn stacked_dense(&self) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.len() * self.b * self.n);
        for sk in &self.sketches {
            data.extend_from_slice(sk.to_dense().as_slice());
        }
        DenseMatrix::from_row_major(self.len() * self.b, self.n, data).expect("sizes agree")
    }
}
