use super::AdaptiveError;
use crate::kronlinalg::{dot, DenseMatrix};
use crate::projmaint::MaintainedProjection;
use crate::sketch::{Sketch, SketchFamily};

/// A dynamic estimator of `‖G_t h_t‖²` (and of `(g_jᵀ h_t)²` on request) that
/// is only guaranteed correct against inputs fixed in advance.
pub trait ObliviousEstimator {
    fn update(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<(), AdaptiveError>;
    fn query(&mut self) -> Result<f64, AdaptiveError>;
    fn query_set(&mut self, indices: &[usize]) -> Result<Vec<f64>, AdaptiveError>;
}

#[derive(Debug, Clone, Default)]
struct Input {
    g: Option<DenseMatrix>,
    h: Vec<f64>,
}

impl Input {
    fn set(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<(), AdaptiveError> {
        if g.cols() != h.len() {
            return Err(AdaptiveError::CardinalityMismatch { expected: g.cols(), found: h.len() });
        }
        self.g = Some(g.clone());
        self.h = h.to_vec();
        Ok(())
    }

    fn g(&self) -> Result<&DenseMatrix, AdaptiveError> {
        self.g.as_ref().ok_or(AdaptiveError::NoInput)
    }
}

fn check_rows(indices: &[usize], rows: usize) -> Result<(), AdaptiveError> {
    match indices.iter().find(|&&j| j >= rows) {
        Some(&j) => Err(AdaptiveError::InvalidParameter(format!("row {j} out of range for {rows} rows"))),
        None => Ok(()),
    }
}

/// Exact answers (`γ = 0`).
#[derive(Debug, Clone, Default)]
pub struct ExactNormEstimator {
    input: Input,
}

impl ExactNormEstimator {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ObliviousEstimator for ExactNormEstimator {
    fn update(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<(), AdaptiveError> {
        self.input.set(g, h)
    }

    fn query(&mut self) -> Result<f64, AdaptiveError> {
        Ok(self.input.g()?.matvec(&self.input.h)?.iter().map(|v| v * v).sum())
    }

    fn query_set(&mut self, indices: &[usize]) -> Result<Vec<f64>, AdaptiveError> {
        let g = self.input.g()?;
        check_rows(indices, g.rows())?;
        Ok(indices.iter().map(|&j| dot(g.row(j), &self.input.h).powi(2)).collect())
    }
}

/// `‖G Rᵀ R h‖² = Σ_i ⟨R g_i, R h⟩²` for one sketch `R` fixed at construction.
/// Work is deferred to query time, so updating an unqueried copy is cheap.
#[derive(Debug, Clone)]
pub struct SketchedNormEstimator {
    sketch: Sketch,
    input: Input,
}

impl SketchedNormEstimator {
    pub fn new(family: SketchFamily, b: usize, dim: usize, seed: u64) -> Result<Self, AdaptiveError> {
        Ok(Self { sketch: Sketch::generate(family, b, dim, seed)?, input: Input::default() })
    }

    pub fn sketch(&self) -> &Sketch {
        &self.sketch
    }

    fn row_products(&self, rows: impl Iterator<Item = usize>) -> Result<Vec<f64>, AdaptiveError> {
        let g = self.input.g()?;
        let rh = self.sketch.apply(&self.input.h)?;
        rows.map(|j| Ok(dot(&self.sketch.apply(g.row(j))?, &rh).powi(2))).collect()
    }
}

impl ObliviousEstimator for SketchedNormEstimator {
    fn update(&mut self, g: &DenseMatrix, h: &[f64]) -> Result<(), AdaptiveError> {
        if h.len() != self.sketch.n() {
            return Err(AdaptiveError::CardinalityMismatch { expected: self.sketch.n(), found: h.len() });
        }
        self.input.set(g, h)
    }

    fn query(&mut self) -> Result<f64, AdaptiveError> {
        let rows = self.input.g()?.rows();
        Ok(self.row_products(0..rows)?.iter().sum())
    }

    fn query_set(&mut self, indices: &[usize]) -> Result<Vec<f64>, AdaptiveError> {
        check_rows(indices, self.input.g()?.rows())?;
        self.row_products(indices.iter().copied())
    }
}

/// Uses a maintained projection as `G`: `query` returns `‖p_l‖²` where
/// `p_l = P̃ R_lᵀ R_l h` is the structure's sketched answer. The `G` passed to
/// `update` is ignored; drive the weight through [`Self::projection_mut`].
#[derive(Debug, Clone)]
pub struct ProjectionNormEstimator {
    proj: MaintainedProjection,
    h: Option<Vec<f64>>,
}

impl ProjectionNormEstimator {
    pub fn new(proj: MaintainedProjection) -> Self {
        Self { proj, h: None }
    }

    pub fn projection(&self) -> &MaintainedProjection {
        &self.proj
    }

    pub fn projection_mut(&mut self) -> &mut MaintainedProjection {
        &mut self.proj
    }

    fn answer(&mut self) -> Result<Vec<f64>, AdaptiveError> {
        let h = self.h.as_ref().ok_or(AdaptiveError::NoInput)?;
        Ok(self.proj.query(h)?)
    }
}

impl ObliviousEstimator for ProjectionNormEstimator {
    fn update(&mut self, _g: &DenseMatrix, h: &[f64]) -> Result<(), AdaptiveError> {
        let nn = self.proj.n() * self.proj.n();
        if h.len() != nn {
            return Err(AdaptiveError::CardinalityMismatch { expected: nn, found: h.len() });
        }
        self.h = Some(h.to_vec());
        Ok(())
    }

    fn query(&mut self) -> Result<f64, AdaptiveError> {
        Ok(self.answer()?.iter().map(|v| v * v).sum())
    }

    fn query_set(&mut self, indices: &[usize]) -> Result<Vec<f64>, AdaptiveError> {
        let p = self.answer()?;
        check_rows(indices, p.len())?;
        Ok(indices.iter().map(|&j| p[j] * p[j]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values() {
        let mut e = ExactNormEstimator::new();
        assert_eq!(e.query(), Err(AdaptiveError::NoInput));
        let g = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        e.update(&g, &[2.0, 1.0]).unwrap();
        assert_eq!(e.query().unwrap(), 4.0 + 9.0);
        assert_eq!(e.query_set(&[1]).unwrap(), vec![9.0]);
        assert!(e.query_set(&[2]).is_err());
    }

    #[test]
    fn sketched_zero_input() {
        let mut e = SketchedNormEstimator::new(SketchFamily::Gaussian, 16, 4, 1).unwrap();
        e.update(&DenseMatrix::identity(4), &[0.0; 4]).unwrap();
        assert_eq!(e.query().unwrap(), 0.0);
        assert!(e.update(&DenseMatrix::identity(3), &[0.0; 3]).is_err());
    }
}
