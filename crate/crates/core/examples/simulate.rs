//! Monte Carlo study of support recovery and interval coverage.
//!
//! `cargo run --release --example simulate -- [reps]`

use betalasso::simulate::{run_simulation, SimConfig, Summary};

fn show(name: &str, s: &Option<Summary>) {
    if let Some(s) = s {
        println!("{name:>10}: {:.4} (se {:.4}, {} reps)", s.mean, s.se, s.count);
    }
}

fn main() -> betalasso::Result<()> {
    let reps = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let mut config = SimConfig::new(1000, 20, 2);
    config.reps = reps;
    config.run_ci = true;

    let report = run_simulation(&config)?;
    println!(
        "lambda {:.4}, lambda0 {:.4}",
        report.lambda,
        report.lambda0.unwrap_or(f64::NAN)
    );
    let a = &report.aggregates;
    show("l1 error", &a.l1_error);
    show("TPR", &a.tpr);
    show("FPR", &a.fpr);
    show("coverage", &a.coverage);
    if !report.failures.is_empty() {
        println!("{} replications failed", report.failures.len());
    }
    Ok(())
}
