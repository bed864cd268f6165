use super::*;
use crate::gen::{random_matrix, random_orthonormal, random_vector, rng_from_seed};
use crate::kronlinalg::kron_apply;

fn batch(seed: u64, m: usize, n: usize) -> ConstraintBatch {
    let mut rng = rng_from_seed(seed);
    let mats: Vec<DenseMatrix> = (0..m).map(|_| random_matrix(&mut rng, n, n)).collect();
    ConstraintBatch::new(&mats).unwrap()
}

fn weight(seed: u64, n: usize) -> EigenWeight {
    let mut rng = rng_from_seed(seed);
    let u = random_orthonormal(&mut rng, n);
    let lam: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 * 0.7).collect();
    EigenWeight::new(u, lam).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

fn sketched_oracle(mp: &MaintainedProjection, out: &QueryOutput, h: &[f64]) -> Vec<f64> {
    let p = oracle::exact_projection_eigen(mp.constraints(), mp.basis(), mp.lam_tilde()).unwrap();
    p.matvec(&out.sketch.gram_apply(h).unwrap()).unwrap()
}

#[test]
fn single_identity_constraint() {
    let c = ConstraintBatch::new(&[DenseMatrix::identity(2)]).unwrap();
    let mp = MaintainedProjection::init(c, &DenseMatrix::identity(2), MaintConfig::default()).unwrap();
    let v = DenseMatrix::identity(2).vec();
    let want = DenseMatrix::from_fn(4, 4, |i, j| v[i] * v[j] / 2.0);
    assert!(mp.m_matrix().sub(&want).unwrap().max_abs() < 1e-12);
}

#[test]
fn init_matches_oracle_projection() {
    let (n, m) = (4, 5);
    let c = batch(1, m, n);
    let eig = weight(2, n);
    let mp = MaintainedProjection::init_from_eigen(c.clone(), &eig, MaintConfig::default()).unwrap();
    let d: Vec<f64> = eig.eigvals().iter().map(|v| v.sqrt()).collect();
    let dd = kron_diag(&d, &d);
    let uu = eig.basis().kron(eig.basis());
    let lhs = uu.scale_cols(&dd).matmul(mp.m_matrix()).unwrap().scale_cols(&dd).matmul(&uu.transpose()).unwrap();
    let want = oracle::exact_projection(&c, &eig.reconstruct(), oracle::Variant::Symmetric).unwrap();
    assert!(lhs.sub(&want).unwrap().frobenius_norm() < 1e-8 * want.frobenius_norm());
}

#[test]
fn query_after_init_matches_oracle() {
    let (n, m) = (4, 6);
    let mut mp = MaintainedProjection::init_from_eigen(batch(3, m, n), &weight(4, n), MaintConfig::default()).unwrap();
    let h = random_vector(&mut rng_from_seed(5), n * n);
    let out = mp.query_detailed(&h).unwrap();
    assert!(out.p_g.iter().all(|v| *v == 0.0));
    assert!(rel(&out.p_l, &sketched_oracle(&mp, &out, &h)) < 1e-8);
    assert!(mp.query(&vec![0.0; n * n]).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn lazy_branch_on_single_doubling() {
    let n = 4;
    let cfg = MaintConfig { eps_mp: 0.099, ..MaintConfig::default() };
    let eig = weight(6, n);
    let mut mp = MaintainedProjection::init_from_eigen(batch(7, 6, n), &eig, cfg).unwrap();
    let mut lam_new = eig.eigvals().to_vec();
    lam_new[2] *= 2.0;
    let m_before = mp.m_matrix().clone();
    let lt = mp.update(&eig.with_eigvals(lam_new.clone()).unwrap()).unwrap();
    assert_eq!(mp.last_update_kind(), Some(UpdateKind::Lazy));
    assert_eq!(lt, lam_new);
    assert_eq!(mp.m_matrix(), &m_before);

    let h = random_vector(&mut rng_from_seed(8), n * n);
    let out = mp.query_detailed(&h).unwrap();
    assert!(rel(&out.p_l, &sketched_oracle(&mp, &out, &h)) < 1e-8);
    assert!(rel(&mp.query_exactish(&h).unwrap(), &oracle::exact_projection_eigen(mp.constraints(), mp.basis(), &lam_new).unwrap().matvec(&h).unwrap()) < 1e-12);
}

#[test]
fn unchanged_weight_is_noop() {
    let eig = weight(9, 3);
    let mut mp = MaintainedProjection::init_from_eigen(batch(10, 4, 3), &eig, MaintConfig::default()).unwrap();
    let lt = mp.update(&eig).unwrap();
    assert_eq!(lt, mp.lam().to_vec());
    assert_eq!(mp.counters().woodbury_ranks, vec![0]);
}

#[test]
fn woodbury_update_tracks_recompute() {
    let n = 5;
    let eig = weight(11, n);
    let mut mp = MaintainedProjection::init_from_eigen(batch(12, 7, n), &eig, MaintConfig::default()).unwrap();
    let lam_new: Vec<f64> = eig.eigvals().iter().enumerate().map(|(i, v)| v * (1.0 + 0.3 * (i % 3) as f64)).collect();
    mp.update_eigvals(&lam_new).unwrap();
    assert_eq!(mp.last_update_kind(), Some(UpdateKind::Woodbury));
    let fresh = oracle::exact_inverse_hessian(mp.rotated_constraints(), mp.lam()).unwrap();
    assert!(mp.m_matrix().sub(&fresh).unwrap().frobenius_norm() < 1e-9 * fresh.frobenius_norm());
    let h = random_vector(&mut rng_from_seed(13), n * n);
    let out = mp.query_detailed(&h).unwrap();
    assert!(rel(&out.p_l, &sketched_oracle(&mp, &out, &h)) < 1e-8);
}

#[test]
fn rotated_constraints_match_explicit() {
    let (n, m) = (3, 4);
    let eig = weight(14, n);
    let c = batch(15, m, n);
    let mp = MaintainedProjection::init_from_eigen(c.clone(), &eig, MaintConfig::default()).unwrap();
    let want = oracle::exact_rotated_constraints(&c, eig.basis()).unwrap();
    assert!(mp.rotated_constraints().sub(&want).unwrap().max_abs() < 1e-12);
    let row = kron_apply(&eig.basis().transpose(), &eig.basis().transpose(), c.matrix().row(0)).unwrap();
    assert_eq!(row, mp.rotated_constraints().row(0));
}

#[test]
fn pool_exhaustion_policy() {
    let n = 3;
    let cfg = MaintConfig { s: 2, regenerate_on_exhaust: false, ..MaintConfig::default() };
    let mut mp = MaintainedProjection::init_from_eigen(batch(16, 3, n), &weight(17, n), cfg.clone()).unwrap();
    let h = vec![1.0; n * n];
    mp.query(&h).unwrap();
    mp.query(&h).unwrap();
    assert_eq!(mp.query(&h), Err(MaintError::PoolExhausted));

    let cfg = MaintConfig { regenerate_on_exhaust: true, ..cfg };
    let mut mp = MaintainedProjection::init_from_eigen(batch(16, 3, n), &weight(17, n), cfg).unwrap();
    let idx: Vec<usize> = (0..5).map(|_| mp.query_detailed(&h).unwrap().sketch_index).collect();
    assert_eq!(idx, vec![0, 1, 0, 1, 0]);
    assert_eq!(mp.pool_generation(), 2);
}

#[test]
fn rejects_bad_inputs() {
    let n = 3;
    let eig = weight(18, n);
    let c = batch(19, 3, n);
    let bad = MaintConfig { eps_mp: 0.2, ..MaintConfig::default() };
    assert!(MaintainedProjection::init_from_eigen(c.clone(), &eig, bad).is_err());
    let mut mp = MaintainedProjection::init_from_eigen(c, &eig, MaintConfig::default()).unwrap();
    assert!(matches!(mp.update_eigvals(&[1.0, f64::NAN, 1.0]), Err(MaintError::NonFinite)));
    assert!(matches!(mp.update_eigvals(&[1.0]), Err(MaintError::LengthMismatch { .. })));
    let other = weight(20, n);
    assert!(matches!(mp.update(&other), Err(MaintError::BasisMismatch(_))));
    assert!(mp.query(&[1.0; 4]).is_err());
}

#[test]
fn snapshot_roundtrip_resumes() {
    let n = 4;
    let eig = weight(21, n);
    let mut mp = MaintainedProjection::init_from_eigen(batch(22, 5, n), &eig, MaintConfig::default()).unwrap();
    let lam_new: Vec<f64> = eig.eigvals().iter().map(|v| v * 1.4).collect();
    mp.update_eigvals(&lam_new).unwrap();
    let h = random_vector(&mut rng_from_seed(23), n * n);
    mp.query(&h).unwrap();
    let json = mp.snapshot().to_json();
    let mut restored = MaintainedProjection::restore(&Snapshot::from_json(&json).unwrap()).unwrap();
    let a = mp.query(&h).unwrap();
    let b = restored.query(&h).unwrap();
    assert!(rel(&a, &b) < 1e-9);
    assert_eq!(mp.cursor(), restored.cursor());
}
