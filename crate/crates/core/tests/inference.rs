mod common;

use betalasso::inference::{approximate_inverse, debias, kkt_subgradient};
use betalasso::math::Rng;
use betalasso::model::{self, Dataset, Params};
use betalasso::solver::{fit, lambda_max, FitConfig};
use common::{random_problem, simulated};
use nalgebra::{DMatrix, DVector};

fn spd(seed: u64, d: usize) -> DMatrix<f64> {
    let mut rng = Rng::new(seed, 0);
    let a = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
    &a * a.transpose() / d as f64 + DMatrix::identity(d, d)
}

#[test]
fn identity_and_diagonal_are_inverted_exactly() {
    let eye = approximate_inverse(&DMatrix::identity(5, 5), 0.3).unwrap();
    assert_eq!(eye.omega, DMatrix::identity(5, 5));
    let d = DVector::from_vec(vec![0.25, 1.0, 3.0, 8.0]);
    let inv = approximate_inverse(&DMatrix::from_diagonal(&d), 0.3).unwrap();
    for i in 0..4 {
        assert!((inv.omega[(i, i)] - 1.0 / d[i]).abs() < 1e-14);
    }
}

#[test]
fn random_matrices_meet_the_constraint() {
    for seed in 0..10 {
        let sigma = spd(seed, 10);
        let inv = approximate_inverse(&sigma, 0.3).unwrap();
        let residual = &inv.omega * &sigma - DMatrix::identity(10, 10);
        for i in 0..10 {
            assert!(inv.violation[i] <= inv.lambda0[i]);
            assert!(residual.row(i).amax() <= inv.lambda0[i] + 1e-12);
        }
        // a tight constraint lands near the exact inverse
        let tight = approximate_inverse(&sigma, 1e-6).unwrap();
        let exact = sigma.clone().try_inverse().unwrap();
        assert!((&tight.omega - &exact).norm() / exact.norm() < 1e-4);
    }
}

#[test]
fn approximate_inverse_validates_input() {
    assert!(approximate_inverse(&DMatrix::zeros(2, 3), 0.1).is_err());
    assert!(approximate_inverse(&DMatrix::identity(2, 2), 0.0).is_err());
    let mut bad = DMatrix::identity(2, 2);
    bad[(1, 1)] = -1.0;
    assert!(approximate_inverse(&bad, 0.1).is_err());
}

fn penalized(data: &Dataset, frac: f64) -> betalasso::solver::FitResult {
    fit(data, &FitConfig::with_lambda(frac * lambda_max(data).unwrap())).unwrap()
}

#[test]
fn subgradient_is_a_valid_certificate() {
    let (data, _) = random_problem(3, 300, 8, 6.0);
    let r = penalized(&data, 0.3);
    let z = kkt_subgradient(&r, &data).unwrap();
    assert_eq!(z[0], 0.0);
    for (j, b) in r.params.beta.iter().enumerate() {
        assert!(z[j + 1].abs() <= 1.0);
        if *b != 0.0 {
            assert!((z[j + 1] - b.signum()).abs() < 1e-5);
        }
    }
}

#[test]
fn debiasing_needs_a_positive_penalty() {
    let (data, _) = random_problem(3, 200, 3, 6.0);
    let r = fit(&data, &FitConfig::with_lambda(0.0)).unwrap();
    assert!(debias(&r, &data, 0.05, 0.05).is_err());
    let r = penalized(&data, 0.3);
    assert!(debias(&r, &data, 0.05, 1.5).is_err());
}

#[test]
fn debiased_estimate_adds_the_scaled_correction() {
    let (data, _) = random_problem(8, 300, 6, 6.0);
    let r = penalized(&data, 0.2);
    let d = debias(&r, &data, 0.05, 0.05).unwrap();
    let rows: Vec<f64> = d.omega.iter().flatten().copied().collect();
    let omega = DMatrix::from_row_slice(7, 7, &rows);
    let correction = omega * DVector::from_vec(d.subgradient.clone()) * r.lambda;
    for j in 0..7 {
        assert_eq!(d.debiased[j], d.estimate[j] + correction[j]);
        let (lo, hi) = d.intervals[j];
        assert!(lo < d.debiased[j] && d.debiased[j] < hi);
        assert!(((hi - lo) / 2.0 - 1.959_963_984_540_054 * d.std_errors[j]).abs() < 1e-8 * (hi - lo));
    }
    assert!(d.omega_constraint_violation <= d.lambda0);
    assert!(d.lambda0 >= d.lambda0_requested);
}

#[test]
fn null_coefficient_intervals_are_calibrated() {
    let truth = Params::new(0.0, vec![0.0], 5.0).unwrap();
    let mut covered = 0;
    let reps = 200;
    for seed in 0..reps {
        let data = simulated(1000 + seed, 400, &truth);
        let r = fit(&data, &FitConfig::with_lambda(0.01)).unwrap();
        let d = debias(&r, &data, 0.01, 0.05).unwrap();
        let (lo, hi) = d.intervals[1];
        covered += (lo <= 0.0 && 0.0 <= hi) as usize;
    }
    assert!(covered as f64 >= 0.9 * reps as f64, "{covered}/{reps}");
}

#[test]
fn orthogonal_design_recovers_the_unpenalized_fit() {
    // an orthogonal design and a tiny penalty: debiasing undoes the shrinkage
    let n = 512;
    let x = DMatrix::from_fn(n, 2, |i, j| if (i >> j) & 1 == 0 { 1.0 } else { -1.0 });
    let truth = Params::new(0.1, vec![0.4, -0.3], 10.0).unwrap();
    let mut rng = Rng::new(9, 0);
    let probe = betalasso::simulate::gen_dataset_at(&mut rng, n, &truth).unwrap().0;
    let data = Dataset::new(x, probe.y().to_vec()).unwrap();
    let mle = fit(&data, &FitConfig::with_lambda(0.0)).unwrap();
    let r = fit(&data, &FitConfig::with_lambda(1e-3)).unwrap();
    let d = debias(&r, &data, 1e-4, 0.05).unwrap();
    for j in 0..2 {
        let shrunk = (r.params.beta[j] - mle.params.beta[j]).abs();
        let debiased = (d.debiased[j + 1] - mle.params.beta[j]).abs();
        assert!(debiased < 0.1 * shrunk, "{debiased} vs {shrunk}");
    }
    let h = model::hessian_beta(&r.params, &data).unwrap();
    assert!(h[(1, 2)].abs() < 1e-2 * h[(1, 1)]);
}
