mod common;

use betalasso::model::{self, Dataset, Params};
use betalasso::Error;
use common::{central_diff, newton_mle, oracle_nll, pack, random_problem, simulated, unpack};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(
        seed in 0u64..10_000,
        n in 5usize..40,
        p in 1usize..6,
        phi in 0.5f64..80.0,
        shift in -0.3f64..0.3,
    ) {
        let p = p.min(n - 1);
        let (data, truth) = random_problem(seed, n, p, phi);
        let theta = Params::new(truth.beta0 + shift, truth.beta.iter().map(|b| b - shift).collect(), phi * 1.3).unwrap();
        let g = model::gradient(&theta, &data).unwrap();
        let mut analytic = g.coefficient_block();
        analytic.push(g.d_phi);
        let x = pack(&theta);
        for (k, a) in analytic.iter().enumerate() {
            let fd = central_diff(|v| model::neg_log_likelihood(&unpack(v), &data).unwrap(), &x, k, 1e-6);
            prop_assert!((a - fd).abs() <= 1e-5 * a.abs().max(1.0), "k = {}: {} vs {}", k, a, fd);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_the_gradient(
        seed in 0u64..10_000,
        p in 1usize..5,
        phi in 1.0f64..40.0,
    ) {
        let (data, theta) = random_problem(seed, 30, p, phi);
        let h = model::hessian_beta(&theta, &data).unwrap();
        let x = pack(&theta);
        for k in 0..=p {
            for r in 0..=p {
                let fd = central_diff(|v| model::gradient(&unpack(v), &data).unwrap().coefficient_block()[r], &x, k, 1e-5);
                prop_assert!((h[(r, k)] - fd).abs() <= 1e-4 * h.amax().max(1e-8));
            }
        }
        prop_assert!((&h - h.transpose()).amax() == 0.0);
    }

    #[test]
    fn likelihood_matches_the_density_formula(seed in 0u64..10_000, phi in 0.5f64..100.0) {
        let (data, theta) = random_problem(seed, 25, 3, phi);
        let ours = model::neg_log_likelihood(&theta, &data).unwrap();
        let reference = oracle_nll(data.x(), data.y(), theta.beta0, &theta.beta, theta.phi);
        prop_assert!((ours - reference).abs() <= 1e-10 * reference.abs().max(1.0));
    }
}

fn duplicated(data: &Dataset) -> Dataset {
    let (n, p) = (data.n(), data.p());
    let x = DMatrix::from_fn(2 * n, p, |i, j| data.x()[(i % n, j)]);
    let y = data.y().iter().chain(data.y()).copied().collect();
    Dataset::new(x, y).unwrap()
}

#[test]
fn duplicating_the_data_leaves_the_mean_objective_unchanged() {
    let (data, theta) = random_problem(3, 40, 4, 7.0);
    let twice = duplicated(&data);
    let a = model::neg_log_likelihood(&theta, &data).unwrap();
    let b = model::neg_log_likelihood(&theta, &twice).unwrap();
    assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
    let ga = model::gradient(&theta, &data).unwrap();
    let gb = model::gradient(&theta, &twice).unwrap();
    for (x, y) in ga.coefficient_block().iter().zip(gb.coefficient_block()) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn gradient_at_the_truth_averages_to_zero() {
    let truth = Params::new(0.3, vec![0.5, -0.2], 5.0).unwrap();
    let reps = 200;
    let draws: Vec<Vec<f64>> = (0..reps)
        .map(|seed| {
            let g = model::gradient(&truth, &simulated(seed, 500, &truth)).unwrap();
            g.coefficient_block().into_iter().chain([g.d_phi]).collect()
        })
        .collect();
    for k in 0..4 {
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!(mean.abs() < 4.0 * (var / reps as f64).sqrt(), "component {k}: {mean}");
    }
}

#[test]
fn hessian_is_positive_definite_at_the_truth() {
    let truth = Params::new(-0.2, vec![0.4, 0.1, -0.3], 10.0).unwrap();
    let data = simulated(9, 800, &truth);
    let h = model::hessian_beta(&truth, &data).unwrap();
    let eig = SymmetricEigen::new(h).eigenvalues;
    assert!(eig.min() > 0.0);
}

#[test]
fn newton_optimum_is_stationary() {
    let truth = Params::new(0.1, vec![0.6, -0.4], 6.0).unwrap();
    let data = simulated(21, 400, &truth);
    let (b0, beta, phi) = newton_mle(data.x(), data.y());
    let g = model::gradient(&Params::new(b0, beta, phi).unwrap(), &data).unwrap();
    assert!(g.coefficient_block().iter().all(|v| v.abs() < 1e-9));
    assert!(g.d_phi.abs() < 1e-9);
}

#[test]
fn per_observation_gradients_average_to_the_gradient() {
    let (data, theta) = random_problem(4, 50, 3, 9.0);
    let rows = model::per_observation_gradients(&theta, &data, true).unwrap();
    assert_eq!(rows.shape(), (50, 5));
    let g = model::gradient(&theta, &data).unwrap();
    let mut full = g.coefficient_block();
    full.push(g.d_phi);
    for (j, v) in full.iter().enumerate() {
        let mean = rows.column(j).sum() / 50.0;
        assert!((mean - v).abs() < 1e-12);
    }
    assert_eq!(
        model::per_observation_gradients(&theta, &data, false).unwrap().ncols(),
        4
    );
}

#[test]
fn mu_lies_in_the_unit_interval() {
    let (data, _) = random_problem(8, 30, 2, 3.0);
    let steep = Params::new(0.0, vec![8.0, -8.0], 3.0).unwrap();
    for m in model::mu_vector(&steep, &data).unwrap() {
        assert!(m > 0.0 && m < 1.0);
    }
    // far in the tails the complement stays positive even when μ rounds to 1
    let tail = betalasso::math::logistic_mu(400.0);
    assert!(tail.one_minus_mu > 0.0 && tail.d1 > 0.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(Params::new(0.0, vec![1.0], 0.0), Err(Error::Validation(_))));
    assert!(matches!(
        Params::new(0.0, vec![f64::NAN], 1.0),
        Err(Error::Validation(_))
    ));
    let err = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.5, 1.0]).unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
    assert!(Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.5]).is_err());
    let (data, _) = random_problem(1, 10, 2, 3.0);
    let wrong = Params::new(0.0, vec![0.0; 3], 1.0).unwrap();
    assert!(model::gradient(&wrong, &data).is_err());
}
