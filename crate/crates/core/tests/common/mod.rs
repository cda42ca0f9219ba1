//! Reference computations written independently of the library internals.
#![allow(dead_code)]

use betalasso::math::Rng;
use betalasso::model::{Dataset, Params};
use betalasso::simulate::gen_dataset_at;
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean negative log Beta density, straight from the density formula.
pub fn oracle_nll(x: &DMatrix<f64>, y: &[f64], beta0: f64, beta: &[f64], phi: f64) -> f64 {
    let n = y.len();
    let mut acc = 0.0;
    for i in 0..n {
        let eta = beta0 + (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
        let mu = sigmoid(eta);
        let (a, b) = (mu * phi, (1.0 - mu) * phi);
        let log_density =
            ln_gamma(phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * y[i].ln() + (b - 1.0) * (1.0 - y[i]).ln();
        acc -= log_density;
    }
    acc / n as f64
}

/// Analytic gradient in `(β0, β, ln φ)` from the textbook score equations.
fn oracle_grad_log_phi(x: &DMatrix<f64>, y: &[f64], theta: &[f64]) -> Vec<f64> {
    let (n, p) = (y.len(), theta.len() - 2);
    let phi = theta[p + 1].exp();
    let mut g = vec![0.0; p + 2];
    for i in 0..n {
        let eta = theta[0] + (0..p).map(|j| x[(i, j)] * theta[j + 1]).sum::<f64>();
        let mu = sigmoid(eta);
        let dmu = mu * (1.0 - mu);
        let ystar = (y[i] / (1.0 - y[i])).ln();
        let mustar = digamma(mu * phi) - digamma((1.0 - mu) * phi);
        let r = -phi * (ystar - mustar) * dmu;
        g[0] += r;
        for j in 0..p {
            g[j + 1] += r * x[(i, j)];
        }
        let dphi = -(digamma(phi) - mu * digamma(mu * phi) - (1.0 - mu) * digamma((1.0 - mu) * phi)
            + mu * y[i].ln()
            + (1.0 - mu) * (1.0 - y[i]).ln());
        g[p + 1] += dphi * phi;
    }
    g.iter().map(|v| v / n as f64).collect()
}

/// Unpenalized maximum likelihood by damped Newton in `(β0, β, ln φ)` with a
/// finite-difference Hessian of the analytic gradient.
pub fn newton_mle(x: &DMatrix<f64>, y: &[f64]) -> (f64, Vec<f64>, f64) {
    let p = x.ncols();
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut theta = vec![0.0; p + 2];
    theta[0] = (ybar / (1.0 - ybar)).ln();
    theta[p + 1] = 1.0;
    let f = |t: &[f64]| oracle_nll(x, y, t[0], &t[1..=p], t[p + 1].exp());
    for _ in 0..200 {
        let g = oracle_grad_log_phi(x, y, &theta);
        let gn = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gn < 1e-12 {
            break;
        }
        let d = p + 2;
        let h = 1e-6;
        let mut hess = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let gp = oracle_grad_log_phi(x, y, &tp);
            let gm = oracle_grad_log_phi(x, y, &tm);
            for r in 0..d {
                hess[(r, k)] = (gp[r] - gm[r]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&DVector::from_vec(g.clone())),
            None => DVector::from_vec(g.clone()),
        };
        let f0 = f(&theta);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if f(&cand) <= f0 || t < 1e-10 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    (theta[0], theta[1..=p].to_vec(), theta[p + 1].exp())
}

/// Simulated data at an arbitrary truth.
pub fn simulated(seed: u64, n: usize, truth: &Params) -> Dataset {
    let mut rng = Rng::new(seed, 0);
    gen_dataset_at(&mut rng, n, truth).unwrap().0
}

/// Central finite difference of `f` at `x` along coordinate `k`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[k] += h;
    xm[k] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Packs `(β0, β, φ)` into one vector and back.
pub fn pack(p: &Params) -> Vec<f64> {
    let mut v = vec![p.beta0];
    v.extend_from_slice(&p.beta);
    v.push(p.phi);
    v
}

pub fn unpack(v: &[f64]) -> Params {
    let p = v.len() - 2;
    Params::new(v[0], v[1..=p].to_vec(), v[p + 1]).unwrap()
}

/// A random dataset with design entries uniform on [−1, 1] and responses
/// drawn at a random truth.
pub fn random_problem(seed: u64, n: usize, p: usize, phi: f64) -> (Dataset, Params) {
    let mut rng = Rng::new(seed, 99);
    let beta: Vec<f64> = (0..p).map(|_| rng.uniform() - 0.5).collect();
    let truth = Params::new(0.3 * (rng.uniform() - 0.5), beta, phi).unwrap();
    let data = simulated(seed, n, &truth);
    (data, truth)
}
