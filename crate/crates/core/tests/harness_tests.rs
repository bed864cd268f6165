use kronproj::adaptive::Mode;
use kronproj::harness::{
    complexity_model, f_ac, gen_drift_sequence, parse_config, run_adaptive_experiment, run_maintenance_experiment,
    weight_g, AdaptiveExperimentConfig, Adversary, ComplexityConfig, DriftConfig, DriftPattern, Format,
    MaintExperimentConfig, Report,
};
use kronproj::projmaint::{MaintConfig, UpdateKind};

fn increments(seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    seq.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a / b).ln()).collect()).collect()
}

#[test]
fn drift_zero_budget_is_constant() {
    let cfg = DriftConfig { c1: 0.0, c2: 0.0, t: 20, pattern: DriftPattern::Bursty { period: 3 }, ..DriftConfig::default() };
    let seq = gen_drift_sequence(&cfg, &[0.5, 1.0, 2.0, 3.0]);
    assert_eq!(seq.len(), 21);
    assert!(seq.iter().all(|l| l == &seq[0]));
}

#[test]
fn drift_sparse_audit() {
    for k in [1usize, 3] {
        let cfg = DriftConfig { n: 6, c1: 0.4, c2: 0.05, t: 500, pattern: DriftPattern::SparseK { k }, seed: k as u64, ..DriftConfig::default() };
        let seq = gen_drift_sequence(&cfg, &[1.0; 6]);
        for d in increments(&seq) {
            assert_eq!(d.iter().filter(|v| **v != 0.0).count(), k);
            assert!(d.iter().all(|v| v.abs() <= 0.4 + 1e-12));
        }
    }
}

#[test]
fn drift_uniform_audit() {
    let (c1, c2) = (0.3, 0.02);
    let cfg = DriftConfig { n: 8, c1, c2, t: 1000, pattern: DriftPattern::Uniform, seed: 4, ..DriftConfig::default() };
    let seq = gen_drift_sequence(&cfg, &[1.0; 8]);
    for d in increments(&seq) {
        let s: f64 = d.iter().map(|v| v * v).sum();
        assert!(s <= c1 * c1 + 5.0 * c2, "{s}");
    }
    // empirical mean of each increment magnitude is close to C1/(2√n)
    let inc = increments(&seq);
    let mean_abs: f64 = inc.iter().flatten().map(|v| v.abs()).sum::<f64>() / (1000.0 * 8.0);
    let mu = c1 / (2.0 * 8f64.sqrt());
    assert!((mean_abs - mu).abs() < 0.2 * mu, "{mean_abs} vs {mu}");
}

#[test]
fn drift_bursty_shape() {
    let cfg = DriftConfig { n: 5, c1: 0.2, c2: 0.0, t: 30, pattern: DriftPattern::Bursty { period: 10 }, seed: 2, ..DriftConfig::default() };
    let seq = gen_drift_sequence(&cfg, &[1.0; 5]);
    for (t, d) in increments(&seq).iter().enumerate() {
        let moved = d.iter().filter(|v| **v != 0.0).count();
        assert_eq!(moved, if t % 10 == 9 { 5 } else { 1 });
    }
}

#[test]
fn drift_config_validation() {
    assert!(DriftConfig { pattern: DriftPattern::SparseK { k: 0 }, ..DriftConfig::default() }.validate().is_err());
    assert!(DriftConfig { pattern: DriftPattern::Bursty { period: 0 }, ..DriftConfig::default() }.validate().is_err());
    assert!(DriftConfig { c1: -1.0, ..DriftConfig::default() }.validate().is_err());
    assert!(DriftConfig::default().validate().is_ok());
}

#[test]
fn empty_maintenance_run() {
    let cfg = MaintExperimentConfig { drift: DriftConfig { t: 0, ..DriftConfig::default() }, ..MaintExperimentConfig::default() };
    let r = run_maintenance_experiment(&cfg).unwrap();
    assert!(r.steps.is_empty());
    assert_eq!(r.counters.updates, 0);
    assert!(r.violations().is_empty());
}

#[test]
fn oracle_checked_maintenance_run() {
    let cfg = MaintExperimentConfig::default();
    assert_eq!((cfg.drift.n, cfg.drift.m, cfg.drift.t), (6, 8, 100));
    let r = run_maintenance_experiment(&cfg).unwrap();
    assert_eq!(r.steps.len(), 100);
    assert!(r.max_query_rel_err.unwrap() <= 1e-7);
    assert!(r.max_m_rel_err.unwrap() <= 1e-7);
    assert!(r.max_spectral_dev <= cfg.maint.eps_mp / 2.0 + 1e-12);
    assert!(r.violations().is_empty(), "{:?}", r.violations());
}

#[test]
fn tiny_drift_is_lazy_only() {
    let cfg = MaintExperimentConfig {
        drift: DriftConfig { n: 9, m: 10, t: 60, c1: 0.01, c2: 0.0001, pattern: DriftPattern::SparseK { k: 2 }, seed: 3 },
        ..MaintExperimentConfig::default()
    };
    let r = run_maintenance_experiment(&cfg).unwrap();
    assert!(r.steps.iter().all(|s| s.kind == UpdateKind::Lazy && s.woodbury_rank == 0));
    assert_eq!(r.counters.lazy_updates, 60);
    assert!(r.violations().is_empty());
}

#[test]
fn bursty_full_recomputes_stay_rare() {
    let cfg = MaintExperimentConfig {
        drift: DriftConfig { n: 6, m: 8, t: 100, c1: 0.05, c2: 0.001, pattern: DriftPattern::Bursty { period: 10 }, seed: 0 },
        maint: MaintConfig::default(),
        check_oracle: false,
        queries_per_step: 1,
    };
    let r = run_maintenance_experiment(&cfg).unwrap();
    assert!(r.counters.full_recomputes < 10, "{}", r.counters.full_recomputes);
}

#[test]
fn complexity_identity_at_omega_two() {
    for i in 0..10 {
        for j in 0..10 {
            let (a, c) = (0.05 + 0.09 * i as f64, 0.095 * j as f64);
            assert!((f_ac(a, c, 2.0, 4.0).unwrap() - 4.0).abs() <= 1e-12);
        }
    }
    assert!(f_ac(1.0, 0.0, 2.0, 4.0).is_err());
}

#[test]
fn complexity_cross_check() {
    let (a, omega) = (0.31, 2.38);
    let theta = omega + 2.0;
    let r = complexity_model(&ComplexityConfig { a, c: 0.0, omega, theta: None, n: 100 }).unwrap();
    // with c = 0 and θ = ω + 2 the numerator collapses to 4a − ω − 2
    let want = (4.0 * a - omega - 2.0) / (a - 1.0);
    assert!((r.f_ac - want).abs() < 1e-12);
    assert!((r.theta - theta).abs() < 1e-15);
    assert_eq!(r.weights.len(), 100);
    let cut = 100f64.powf(a);
    for &(i, g) in &r.weights {
        if (i as f64) < cut {
            assert!((g - 100f64.powf(-a)).abs() < 1e-15);
        }
        assert!((g - weight_g(i, 100, a, omega)).abs() == 0.0);
    }
    assert!(complexity_model(&ComplexityConfig { a: 1.0, ..ComplexityConfig::default() }).is_err());
    assert!(complexity_model(&ComplexityConfig { c: 1.0, ..ComplexityConfig::default() }).is_err());
}

#[test]
fn adaptive_zero_matrix_and_single_step() {
    let cfg = AdaptiveExperimentConfig { zero_matrix: true, t: 5, runs: 2, copies: Some(400), subsample: Some(300), ..AdaptiveExperimentConfig::default() };
    let r = run_adaptive_experiment(Mode::Norm, &cfg).unwrap();
    assert!(r.records.iter().all(|s| s.u.iter().all(|v| *v == 0.0)));
    assert_eq!(r.success_fraction, Some(1.0));

    let cfg = AdaptiveExperimentConfig { t: 1, runs: 1, ..AdaptiveExperimentConfig::default() };
    let r = run_adaptive_experiment(Mode::SetQuery { k: 8 }, &cfg).unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].u.len(), 8);
    assert_eq!(r.counters.copy_updates, 20);
    assert_eq!(r.counters.inner_queries, 7);
}

#[test]
fn adaptive_oblivious_large_q_is_accurate() {
    let cfg = AdaptiveExperimentConfig {
        adversary: Adversary::Oblivious,
        t: 20,
        runs: 5,
        copies: Some(400),
        subsample: Some(300),
        ..AdaptiveExperimentConfig::default()
    };
    let r = run_adaptive_experiment(Mode::Norm, &cfg).unwrap();
    assert_eq!(r.success_fraction, Some(1.0));
}

#[test]
fn reports_are_deterministic_and_render() {
    let cfg = MaintExperimentConfig { drift: DriftConfig { t: 15, ..DriftConfig::default() }, ..MaintExperimentConfig::default() };
    let a = run_maintenance_experiment(&cfg).unwrap().render(Format::Json);
    let b = run_maintenance_experiment(&cfg).unwrap().render(Format::Json);
    assert_eq!(a, b);
    let csv = run_maintenance_experiment(&cfg).unwrap().render(Format::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,kind,woodbury_rank,spectral_dev,m_rel_err,query_rel_err");
    assert_eq!(lines.len(), 16);

    let cfg = AdaptiveExperimentConfig { t: 10, runs: 3, ..AdaptiveExperimentConfig::default() };
    let a = run_adaptive_experiment(Mode::Norm, &cfg).unwrap().render(Format::Json);
    let b = run_adaptive_experiment(Mode::Norm, &cfg).unwrap().render(Format::Json);
    assert_eq!(a, b);
}

#[test]
fn configs_parse_from_toml() {
    let cfg: MaintExperimentConfig = parse_config(
        r#"
        check_oracle = false
        [drift]
        n = 4
        t = 12
        pattern = { kind = "sparse_k", k = 2 }
        [maint]
        eps_mp = 0.1
        family = { tag = "count_sketch" }
        "#,
    )
    .unwrap();
    assert_eq!(cfg.drift.n, 4);
    assert_eq!(cfg.drift.pattern, DriftPattern::SparseK { k: 2 });
    assert_eq!(cfg.maint.eps_mp, 0.1);
    assert!(!cfg.check_oracle);
    assert_eq!(cfg.drift.m, DriftConfig::default().m);
    assert!(parse_config::<MaintExperimentConfig>("drift = 3").is_err());
}
