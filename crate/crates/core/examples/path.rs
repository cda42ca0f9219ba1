//! Traces the solution path on a log-spaced λ grid with warm starts.
//!
//! `cargo run --release --example path`

use betalasso::math::Rng;
use betalasso::simulate::{gen_dataset, SimConfig};
use betalasso::solver::{solution_path, LambdaFloor, PathConfig};

fn main() -> betalasso::Result<()> {
    let (data, _) = gen_dataset(&mut Rng::new(3, 0), &SimConfig::new(500, 12, 3))?;
    let config = PathConfig {
        n_lambda: 20,
        lambda_min: LambdaFloor::Fraction(0.01),
        ..PathConfig::default()
    };
    for point in solution_path(&data, &config)? {
        let beta: Vec<String> = point.fit.params.beta.iter().map(|b| format!("{b:6.3}")).collect();
        println!(
            "{:.5}  {:2} active  [{}]",
            point.lambda,
            point.fit.active_set.len(),
            beta.join(" ")
        );
    }
    Ok(())
}
