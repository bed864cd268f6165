use kronproj::gen::{derive_seed, random_matrix, random_orthonormal, random_vector, rng_from_seed};
use kronproj::harness::{gen_drift_sequence, DriftConfig, DriftPattern};
use kronproj::kronlinalg::{DenseMatrix, EigenWeight};
use kronproj::oracle::{self, Variant};
use kronproj::projmaint::{
    expand_index_set, soft_threshold, ConstraintBatch, MaintConfig, MaintainedProjection, UpdateKind,
};
use proptest::prelude::*;
use rand::Rng;

fn rel(a: &[f64], want: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(want).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = want.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn setup(seed: u64, n: usize, m: usize) -> (ConstraintBatch, EigenWeight) {
    let mut rng = rng_from_seed(seed);
    let mats: Vec<DenseMatrix> = (0..m).map(|_| random_matrix(&mut rng, n, n)).collect();
    let basis = random_orthonormal(&mut rng, n);
    let lam: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    (ConstraintBatch::new(&mats).unwrap(), EigenWeight::new(basis, lam).unwrap())
}

/// `Gᵀ(G(Λ⊗Λ)Gᵀ)⁻¹G` with `G` materialized through `U ⊗ U`.
fn m_from_scratch(c: &ConstraintBatch, basis: &DenseMatrix, lam: &[f64]) -> DenseMatrix {
    let g = oracle::exact_rotated_constraints(c, basis).unwrap();
    oracle::exact_inverse_hessian(&g, lam).unwrap()
}

#[test]
fn identity_weight_reduces_to_plain_projection() {
    let (c, _) = setup(1, 3, 4);
    let mp = MaintainedProjection::init(c.clone(), &DenseMatrix::identity(3), MaintConfig::default()).unwrap();
    // U⊗U is orthogonal, so M is the row-space projector in the rotated frame
    let uu = mp.basis().kron(mp.basis());
    let lifted = uu.matmul(mp.m_matrix()).unwrap().matmul(&uu.transpose()).unwrap();
    let plain = oracle::projection_onto_rows(c.matrix()).unwrap();
    assert!(lifted.sub(&plain).unwrap().max_abs() < 1e-10);
}

#[test]
fn full_rank_constraints_give_sketched_identity() {
    let n = 2;
    let (c, eig) = setup(2, n, n * n);
    let mut mp = MaintainedProjection::init_from_eigen(c, &eig, MaintConfig::default()).unwrap();
    let h = random_vector(&mut rng_from_seed(3), n * n);
    let out = mp.query_detailed(&h).unwrap();
    let want = out.sketch.gram_apply(&h).unwrap();
    assert!(rel(&out.p_l, &want) < 1e-8);
    assert!(rel(&mp.query_exactish(&h).unwrap(), &h) < 1e-10);
}

#[test]
fn expand_index_set_matches_delta_support() {
    let n = 4;
    let lam = [1.0, 2.0, 3.0, 4.0];
    for s in [vec![], vec![1], vec![0, 3], vec![0, 1, 2, 3]] {
        let mut c = [0.0; 4];
        for &i in &s {
            c[i] = 0.5;
        }
        // Δ = Λ⊗C + C⊗Λ + C⊗C, enumerated pairwise
        let mut want = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let d = lam[i] * c[j] + c[i] * lam[j] + c[i] * c[j];
                if d != 0.0 {
                    want.push(i * n + j);
                }
            }
        }
        let got = expand_index_set(&s, n).unwrap();
        assert_eq!(got, want);
        assert_eq!(got.len(), 2 * n * s.len() - s.len() * s.len());
    }
}

#[test]
fn fifty_updates_track_recompute() {
    let (n, m) = (6, 8);
    let (c, eig) = setup(4, n, m);
    let drift = DriftConfig { n, m, t: 50, c1: 0.3, c2: 0.02, pattern: DriftPattern::Uniform, seed: 5 };
    let seq = gen_drift_sequence(&drift, eig.eigvals());
    let mut mp = MaintainedProjection::init_from_eigen(c.clone(), &eig, MaintConfig::default()).unwrap();
    let mut woodbury = 0;
    for lam in &seq[1..] {
        mp.update(&eig.with_eigvals(lam.clone()).unwrap()).unwrap();
        if mp.last_update_kind() == Some(UpdateKind::Woodbury) {
            woodbury += 1;
        }
        let fresh = m_from_scratch(&c, mp.basis(), mp.lam());
        assert!(mp.m_matrix().sub(&fresh).unwrap().frobenius_norm() <= 1e-7 * fresh.frobenius_norm());
    }
    assert!(woodbury > 0);
}

#[test]
fn sketch_indices_never_repeat_within_a_pool() {
    let (n, m) = (4, 5);
    let (c, eig) = setup(6, n, m);
    let cfg = MaintConfig { s: 4, ..MaintConfig::default() };
    let mut mp = MaintainedProjection::init_from_eigen(c, &eig, cfg).unwrap();
    let drift = DriftConfig { n, m, t: 40, c1: 0.2, c2: 0.01, pattern: DriftPattern::SparseK { k: 2 }, seed: 7 };
    let seq = gen_drift_sequence(&drift, eig.eigvals());
    let h = vec![1.0; n * n];
    let mut seen: Vec<usize> = Vec::new();
    let mut generation = mp.pool_generation();
    for lam in &seq[1..] {
        mp.update_eigvals(lam).unwrap();
        for _ in 0..3 {
            if mp.pool_generation() != generation {
                generation = mp.pool_generation();
                seen.clear();
            }
            let l = mp.query_detailed(&h).unwrap().sketch_index;
            assert!(!seen.contains(&l));
            seen.push(l);
            assert!(mp.cursor() < 4);
        }
    }
}

#[test]
fn lazy_deferral_is_visible_at_query_time() {
    let (n, m) = (9, 10);
    let (c, eig) = setup(8, n, m);
    let cfg = MaintConfig { eps_mp: 0.05, a_exp: 0.5, ..MaintConfig::default() };
    let mut mp = MaintainedProjection::init_from_eigen(c, &eig, cfg).unwrap();
    let mut lam = eig.eigvals().to_vec();
    lam[0] *= 1.5;
    lam[5] *= 0.7;
    // 2 moved coordinates < 9^0.5
    let lt = mp.update_eigvals(&lam).unwrap();
    assert_eq!(mp.last_update_kind(), Some(UpdateKind::Lazy));
    let changed: Vec<usize> = (0..n).filter(|&i| lt[i] != mp.lam()[i]).collect();
    assert_eq!(changed, vec![0, 5]);
    let h = random_vector(&mut rng_from_seed(9), n * n);
    let out = mp.query_detailed(&h).unwrap();
    assert!(out.p_g.iter().any(|v| *v != 0.0));
    let p = oracle::exact_projection_eigen(mp.constraints(), mp.basis(), &lt).unwrap();
    assert!(rel(&out.p_l, &p.matvec(&out.sketch.gram_apply(&h).unwrap()).unwrap()) < 1e-8);
    assert_eq!(mp.last_p_g().unwrap(), out.p_g.as_slice());
}

#[test]
fn soft_threshold_hand_traces() {
    let e = std::f64::consts::E;
    let t = soft_threshold(&[1.0; 4], &[e, 1.0, 1.0, 1.0], 1).unwrap();
    assert_eq!((t.r, t.lam_hat.clone()), (1, vec![e, 1.0, 1.0, 1.0]));
    let lam_new: Vec<f64> = (0..8).map(|i| (1.0 - 0.01 * i as f64).exp()).collect();
    assert_eq!(soft_threshold(&[1.0; 8], &lam_new, 1).unwrap().r, 8);
}

#[test]
fn query_exactish_mirrors() {
    let (n, m) = (4, 6);
    let (c, eig) = setup(10, n, m);
    let mut mp = MaintainedProjection::init_from_eigen(c.clone(), &eig, MaintConfig::default()).unwrap();
    let h = random_vector(&mut rng_from_seed(11), n * n);
    assert!(mp.query_exactish(&vec![0.0; n * n]).unwrap().iter().all(|v| *v == 0.0));
    let p = oracle::exact_projection(&c, &eig.reconstruct(), Variant::Symmetric).unwrap();
    assert!(rel(&mp.query_exactish(&h).unwrap(), &p.matvec(&h).unwrap()) < 1e-8);
    let lam: Vec<f64> = eig.eigvals().iter().map(|v| v * 1.3).collect();
    mp.update_eigvals(&lam).unwrap();
    let p = oracle::exact_projection_eigen(&c, eig.basis(), mp.lam_tilde()).unwrap();
    assert!(rel(&mp.query_exactish(&h).unwrap(), &p.matvec(&h).unwrap()) < 1e-8);
}

#[test]
fn oracle_projection_spectrum() {
    let (c, eig) = setup(12, 3, 5);
    for variant in [Variant::Symmetric, Variant::Left] {
        let p = oracle::exact_projection(&c, &eig.reconstruct(), variant).unwrap();
        let e = kronproj::kronlinalg::sym_eigen(&p).unwrap();
        assert!(e.eigvals().iter().all(|v| v.abs() < 1e-8 || (v - 1.0).abs() < 1e-8));
        assert!((p.trace() - 5.0).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Every query after every update equals the oracle projection at `λ̃`
    /// applied to `R_lᵀ R_l h`, and `λ̃` stays within `ε/2` in log scale.
    #[test]
    fn trajectory_matches_oracle(
        n in 2usize..=5,
        m_frac in 0.2f64..0.9,
        pattern in prop::sample::select(vec![
            DriftPattern::Uniform,
            DriftPattern::SparseK { k: 1 },
            DriftPattern::SparseK { k: 2 },
            DriftPattern::Bursty { period: 5 },
        ]),
        family in prop::sample::select(kronproj::sketch::SketchFamily::ALL_DEFAULT.to_vec()),
        seed in any::<u64>(),
    ) {
        let m = ((n * n) as f64 * m_frac).ceil() as usize;
        let (c, eig) = setup(seed, n, m);
        let cfg = MaintConfig { family, b: 16, s: 3, seed: derive_seed(seed, 9), ..MaintConfig::default() };
        let mut mp = MaintainedProjection::init_from_eigen(c.clone(), &eig, cfg.clone()).unwrap();
        let pattern = match pattern {
            DriftPattern::SparseK { k } => DriftPattern::SparseK { k: k.min(n) },
            p => p,
        };
        let drift = DriftConfig { n, m, t: 25, c1: 0.25, c2: 0.02, pattern, seed };
        let seq = gen_drift_sequence(&drift, eig.eigvals());
        let mut rng = rng_from_seed(seed ^ 0x55);
        for lam in &seq[1..] {
            let lt = mp.update_eigvals(lam).unwrap();
            for (a, b) in lam.iter().zip(&lt) {
                prop_assert!((a / b).ln().abs() <= cfg.eps_mp / 2.0 + 1e-12);
            }
            let h = random_vector(&mut rng, n * n);
            let out = mp.query_detailed(&h).unwrap();
            let p = oracle::exact_projection_eigen(&c, eig.basis(), &lt).unwrap();
            let want = p.matvec(&out.sketch.gram_apply(&h).unwrap()).unwrap();
            prop_assert!(rel(&out.p_l, &want) <= 1e-7, "rel {}", rel(&out.p_l, &want));
        }
    }
}
