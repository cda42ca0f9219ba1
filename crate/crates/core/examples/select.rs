//! Best subset by AIC over every subset of a handful of features.
//!
//! `cargo run --release --example select`

use betalasso::math::Rng;
use betalasso::model::Params;
use betalasso::selection::{exhaustive_aic, fit_subset, DEFAULT_P_CAP};
use betalasso::simulate::gen_dataset_at;

fn main() -> betalasso::Result<()> {
    let truth = Params::new(-0.4, vec![0.5, 0.0, -0.3, 0.0, 0.0, 0.2], 8.0)?;
    let (data, _) = gen_dataset_at(&mut Rng::new(5, 0), 600, &truth)?;

    let selection = exhaustive_aic(&data, DEFAULT_P_CAP)?;
    let best = &selection.best;
    println!("fitted {} subsets", selection.visited);
    println!("best subset {:?}  AIC {:.2}", best.subset, best.aic);
    println!(
        "coefficients {:?}",
        best.full_beta(data.p())
            .iter()
            .map(|b| (b * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );

    let full = fit_subset(&data, &(0..data.p()).collect::<Vec<_>>())?;
    println!("full model AIC {:.2}", full.aic);
    Ok(())
}
