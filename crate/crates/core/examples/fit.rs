//! Fits a single lasso-penalized Beta regression to simulated data.
//!
//! `cargo run --release --example fit`

use betalasso::math::Rng;
use betalasso::simulate::{gen_dataset, SimConfig};
use betalasso::solver::{fit, lambda_max, FitConfig};

fn main() -> betalasso::Result<()> {
    let config = SimConfig::new(800, 30, 4);
    let (data, truth) = gen_dataset(&mut Rng::new(7, 0), &config)?;

    let lambda = 0.5 * (30f64.ln() / 800.0).sqrt();
    println!("lambda = {lambda:.4} (lambda_max = {:.4})", lambda_max(&data)?);
    let result = fit(&data, &FitConfig::with_lambda(lambda))?;

    println!(
        "converged = {} after {} iterations, KKT residual {:.2e}",
        result.converged, result.iterations, result.kkt_residual
    );
    println!(
        "intercept {:.4}, precision {:.3}",
        result.params.beta0, result.params.phi
    );
    println!("{:>4} {:>10} {:>10}", "j", "estimate", "truth");
    for &j in &result.active_set {
        println!("{j:>4} {:>10.4} {:>10.4}", result.params.beta[j], truth.beta[j]);
    }
    Ok(())
}
