//! Fits the log-linear scaling law for ℓ1 error over a small grid.
//!
//! `cargo run --release --example scaling`

use betalasso::simulate::{run_simulation, scaling_regression, SimConfig};

fn main() -> betalasso::Result<()> {
    let mut reports = Vec::new();
    for s in [2, 5] {
        for p in [20, 50] {
            for n in [400, 800] {
                let mut config = SimConfig::new(n, p, s);
                config.reps = 10;
                let report = run_simulation(&config)?;
                let err = report.aggregates.l1_error.as_ref().map_or(f64::NAN, |e| e.mean);
                println!("s={s:<2} p={p:<3} n={n:<4} mean l1 error {err:.4}");
                reports.push(report);
            }
        }
    }
    let law = scaling_regression(&reports)?;
    let [g0, g1, g2, g3] = law.gamma;
    println!(
        "log err = {g0:.3} + {g1:.3} log s + {g2:.3} log n + {g3:.3} log log p   (R^2 {:.3})",
        law.r_squared
    );
    Ok(())
}
