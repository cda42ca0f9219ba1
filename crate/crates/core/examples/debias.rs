//! Debiased estimates and confidence intervals after a lasso fit.
//!
//! `cargo run --release --example debias`

use betalasso::inference::debias;
use betalasso::math::Rng;
use betalasso::simulate::{gen_dataset, SimConfig};
use betalasso::solver::{fit, FitConfig};

fn main() -> betalasso::Result<()> {
    let config = SimConfig::new(1000, 20, 2);
    let (data, truth) = gen_dataset(&mut Rng::new(11, 0), &config)?;
    let result = fit(&data, &FitConfig::with_lambda(config.lambda()))?;
    let d = debias(&result, &data, config.lambda0(), 0.05)?;

    println!(
        "lambda0 used: {:.4} (constraint violation {:.2e})",
        d.lambda0, d.omega_constraint_violation
    );
    println!(
        "{:>4} {:>9} {:>9} {:>9} {:>20}",
        "j", "lasso", "debiased", "truth", "95% interval"
    );
    for j in 0..data.p() {
        let (lo, hi) = d.intervals[j + 1];
        println!(
            "{j:>4} {:>9.4} {:>9.4} {:>9.4}   [{lo:>7.4}, {hi:>7.4}]",
            d.estimate[j + 1],
            d.debiased[j + 1],
            truth.beta[j]
        );
    }
    Ok(())
}
