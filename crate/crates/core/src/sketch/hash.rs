use rand::Rng;

/// Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mulmod(a: u64, b: u64) -> u64 {
    let p = (a as u128) * (b as u128);
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    let r = lo + hi;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

#[inline]
fn addmod(a: u64, b: u64) -> u64 {
    let r = a + b;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// `k`-wise independent hash family: a random polynomial of degree `k - 1`
/// over GF(2^61 - 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyHash {
    coeffs: Vec<u64>,
}

impl PolyHash {
    pub fn new(rng: &mut impl Rng, independence: usize) -> Self {
        assert!(independence >= 1);
        let coeffs = (0..independence).map(|_| rng.random_range(0..MERSENNE_61)).collect();
        Self { coeffs }
    }

    pub fn independence(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn eval(&self, key: u64) -> u64 {
        let x = key % MERSENNE_61;
        self.coeffs.iter().rev().fold(0, |acc, &c| addmod(mulmod(acc, x), c))
    }

    /// Bucket in `0..range`.
    #[inline]
    pub fn bucket(&self, key: u64, range: usize) -> usize {
        (self.eval(key) % range as u64) as usize
    }

    /// `±1` from the low bit of the hash value.
    #[inline]
    pub fn sign(&self, key: u64) -> f64 {
        if self.eval(key) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
