//! Seeded generators for matrices, vectors and child seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kronlinalg::{norm2, DenseMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a parent seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v = random_vector(rng, n);
        let nrm = norm2(&v);
        if nrm > 1e-12 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Matrix with i.i.d. standard normal entries.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthonormal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthonormal(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let g = random_matrix(rng, n, n);
    let qr = g.to_nalgebra().qr();
    DenseMatrix::from_nalgebra(&qr.q())
}

/// `X Xᵀ + shift·I` with `X` of shape `n x rank`.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, shift: f64) -> DenseMatrix {
    let x = random_matrix(rng, n, rank);
    let mut w = x.matmul(&x.transpose()).expect("conforming");
    for i in 0..n {
        w[(i, i)] += shift;
    }
    w.symmetrize();
    w
}
