use betalasso::math::{digamma, Rng};
use betalasso::model::Params;
use betalasso::simulate::{
    fit_scaling_law, gen_beta_star, gen_dataset, gen_dataset_at, run_replication, run_simulation, scaling_regression,
    ScalingObservation, SimConfig,
};

#[test]
fn design_columns_are_standard_normal() {
    let config = SimConfig::new(4000, 5, 2);
    let (data, _) = gen_dataset(&mut Rng::new(1, 0), &config).unwrap();
    for j in 0..5 {
        let col = data.x().column(j);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4000.0;
        assert!(mean.abs() < 4.0 / 4000f64.sqrt());
        assert!((var - 1.0).abs() < 0.1);
    }
}

#[test]
fn responses_center_on_the_logistic_intercept_without_slopes() {
    let truth = Params::new(0.7, vec![0.0; 3], 4.0).unwrap();
    let (data, _) = gen_dataset_at(&mut Rng::new(2, 0), 20_000, &truth).unwrap();
    let mu = 1.0 / (1.0 + (-0.7f64).exp());
    let mean = data.y().iter().sum::<f64>() / 20_000.0;
    let sd = (mu * (1.0 - mu) / 5.0).sqrt() / 20_000f64.sqrt();
    assert!((mean - mu).abs() < 4.0 * sd);
}

#[test]
fn conditional_log_moment_matches_the_digamma_identity() {
    let truth = Params::new(-0.2, vec![0.6, -0.4], 6.0).unwrap();
    let (data, _) = gen_dataset_at(&mut Rng::new(3, 0), 20_000, &truth).unwrap();
    let n = data.n();
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let eta = truth.beta0 + truth.beta[0] * data.x()[(i, 0)] + truth.beta[1] * data.x()[(i, 1)];
            let mu = 1.0 / (1.0 + (-eta).exp());
            data.y()[i].ln() - (digamma(mu * 6.0).unwrap() - digamma(6.0).unwrap())
        })
        .collect();
    let mean = resid.iter().sum::<f64>() / n as f64;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 4.0 * (var / n as f64).sqrt());
}

#[test]
fn replications_are_deterministic() {
    let mut config = SimConfig::new(200, 10, 2);
    config.run_ci = true;
    let a = run_replication(&config, 3).unwrap();
    let b = run_replication(&config, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.l1_error, run_replication(&config, 4).unwrap().l1_error);
}

#[test]
fn support_rates_account_for_the_active_set() {
    let mut config = SimConfig::new(300, 15, 4);
    config.reps = 8;
    config.run_ci = true;
    let report = run_simulation(&config).unwrap();
    assert!(report.failures.is_empty());
    for r in &report.per_rep {
        let counted = r.tpr * 4.0 + r.fpr * 11.0;
        assert!((counted - r.active as f64).abs() < 1e-9);
        let c = r.coverage.unwrap();
        assert!((0.0..=1.0).contains(&c));
    }
    let mean = report.per_rep.iter().map(|r| r.l1_error).sum::<f64>() / 8.0;
    let agg = report.aggregates.l1_error.unwrap();
    assert!((agg.mean - mean).abs() < 1e-12);
    assert_eq!(agg.count, 8);
    assert_eq!(report.lambda, config.lambda());
    assert_eq!(report.lambda0, Some(config.lambda0()));
}

#[test]
fn skipping_intervals_leaves_coverage_empty() {
    let mut config = SimConfig::new(150, 8, 2);
    config.reps = 3;
    let report = run_simulation(&config).unwrap();
    assert!(report.aggregates.coverage.is_none());
    assert!(report.lambda0.is_none());
}

#[test]
fn truth_generation_follows_the_pattern() {
    let beta = gen_beta_star(10, 4).unwrap();
    assert!(beta[4..].iter().all(|b| *b == 0.0));
    assert!(beta[..4].iter().all(|b| *b != 0.0));
    assert!(gen_beta_star(3, 4).is_err());
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut c = SimConfig::new(100, 10, 2);
    c.reps = 0;
    assert!(run_simulation(&c).is_err());
    let mut c = SimConfig::new(100, 10, 2);
    c.phi_star = -1.0;
    assert!(run_simulation(&c).is_err());
    assert!(run_simulation(&SimConfig::new(100, 10, 11)).is_err());
}

#[test]
fn scaling_law_is_invariant_to_duplicated_reports() {
    let mut reports = Vec::new();
    for (n, p, s) in [(150, 10, 2), (300, 10, 3), (150, 20, 3), (300, 20, 2)] {
        let mut c = SimConfig::new(n, p, s);
        c.reps = 4;
        reports.push(run_simulation(&c).unwrap());
    }
    let once = scaling_regression(&reports).unwrap();
    let twice: Vec<_> = reports.iter().chain(&reports).cloned().collect();
    let doubled = scaling_regression(&twice).unwrap();
    for (a, b) in once.gamma.iter().zip(doubled.gamma) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(doubled.observations, 2 * once.observations);
}

#[test]
fn scaling_law_needs_variation_in_every_factor() {
    let obs: Vec<_> = [(2, 100), (5, 200), (10, 400)]
        .iter()
        .map(|&(s, n)| ScalingObservation {
            s,
            n,
            p: 50,
            l1_error: 1.0,
        })
        .collect();
    assert!(fit_scaling_law(&obs).is_err());
}
