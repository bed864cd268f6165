use serde::{Deserialize, Serialize};

use super::DpError;

/// `{0} ∪ {±(1+α)^j}` covering magnitudes `[1/U, U(1+α)]`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGeometricGrid {
    u_bound: f64,
    alpha: f64,
    j_min: i32,
    /// Positive magnitudes `(1+α)^j`, ascending.
    mags: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridDescriptor {
    u_bound: f64,
    alpha: f64,
    points: usize,
}

impl Serialize for SignedGeometricGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridDescriptor { u_bound: self.u_bound, alpha: self.alpha, points: self.len() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedGeometricGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let desc = GridDescriptor::deserialize(d)?;
        let grid = Self::new(desc.u_bound, desc.alpha).map_err(serde::de::Error::custom)?;
        if grid.len() != desc.points {
            return Err(serde::de::Error::custom("grid point count disagrees with (U, alpha)"));
        }
        Ok(grid)
    }
}

/// Exponent range slack so that exact powers are not lost to `ln` rounding.
const LOG_SLACK: f64 = 1e-9;

impl SignedGeometricGrid {
    pub fn new(u_bound: f64, alpha: f64) -> Result<Self, DpError> {
        if !(u_bound > 1.0 && u_bound.is_finite()) {
            return Err(DpError::InvalidParameter(format!("U = {u_bound} must be a finite value > 1")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(DpError::InvalidParameter(format!("alpha = {alpha} must be positive")));
        }
        let base = (1.0 + alpha).ln();
        let j_min = (-u_bound.ln() / base - LOG_SLACK).ceil() as i32;
        let j_max = ((u_bound * (1.0 + alpha)).ln() / base - LOG_SLACK).ceil() as i32;
        let mags: Vec<f64> = (j_min..=j_max).map(|j| (1.0 + alpha).powi(j)).collect();
        Ok(Self { u_bound, alpha, j_min, mags })
    }

    pub fn u_bound(&self) -> f64 {
        self.u_bound
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of grid points, including 0 and both signs.
    pub fn len(&self) -> usize {
        2 * self.mags.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_magnitude(&self) -> f64 {
        self.mags[0]
    }

    pub fn max_magnitude(&self) -> f64 {
        *self.mags.last().expect("grid is nonempty")
    }

    /// Exponent `j` of the smallest positive magnitude.
    pub fn min_exponent(&self) -> i32 {
        self.j_min
    }

    /// Point at position `idx` in ascending order.
    pub fn point(&self, idx: usize) -> f64 {
        let k = self.mags.len();
        match idx.cmp(&k) {
            std::cmp::Ordering::Less => -self.mags[k - 1 - idx],
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => self.mags[idx - k - 1],
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Position of an exact grid point.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        let k = self.mags.len();
        if v == 0.0 {
            return Some(k);
        }
        let pos = self.mags.binary_search_by(|m| m.total_cmp(&v.abs())).ok()?;
        Some(if v > 0.0 { k + 1 + pos } else { k - 1 - pos })
    }

    /// Index of `round(v)`.
    pub fn round_index(&self, v: f64) -> Result<usize, DpError> {
        let k = self.mags.len();
        if v == 0.0 {
            return Ok(k);
        }
        if !v.is_finite() || v.abs() > self.u_bound * (1.0 + self.alpha) {
            return Err(DpError::OutOfRange(v));
        }
        // smallest magnitude >= |v|; tiny values land on the first magnitude
        let pos = self.mags.partition_point(|&m| m < v.abs());
        if pos == k {
            return Err(DpError::OutOfRange(v));
        }
        Ok(if v > 0.0 { k + 1 + pos } else { k - 1 - pos })
    }

    /// `sign(v)·(1+α)^{⌈log_{1+α}|v|⌉}`, so `|v| ≤ |round(v)| ≤ (1+α)|v|`.
    pub fn round(&self, v: f64) -> Result<f64, DpError> {
        Ok(self.point(self.round_index(v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure() {
        let g = SignedGeometricGrid::new(16.0, 1.0).unwrap();
        // magnitudes 1/16 .. 32
        assert_eq!(g.min_magnitude(), 1.0 / 16.0);
        assert_eq!(g.max_magnitude(), 32.0);
        let pts = g.points();
        assert_eq!(pts.len(), 2 * 10 + 1);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(pts[pts.len() - 1 - i], -p);
            assert_eq!(g.index_of(*p), Some(i));
        }
        assert_eq!(g.index_of(3.0), None);
    }

    #[test]
    fn rounding_examples() {
        let g = SignedGeometricGrid::new(100.0, 0.1).unwrap();
        assert_eq!(g.round(0.0).unwrap(), 0.0);
        assert!((g.round(1.05).unwrap() - 1.1).abs() < 1e-15);
        let g = SignedGeometricGrid::new(16.0, 1.0).unwrap();
        assert_eq!(g.round(-2.0).unwrap(), -2.0);
        assert_eq!(g.round(1e-9).unwrap(), 1.0 / 16.0);
        assert_eq!(g.round(32.0).unwrap(), 32.0);
        assert!(matches!(g.round(33.0), Err(DpError::OutOfRange(_))));
    }

    #[test]
    fn serde_descriptor() {
        let g = SignedGeometricGrid::new(1024.0, 0.25).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"points\""));
        let back: SignedGeometricGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn bad_parameters() {
        assert!(SignedGeometricGrid::new(1.0, 0.5).is_err());
        assert!(SignedGeometricGrid::new(10.0, 0.0).is_err());
    }
}
