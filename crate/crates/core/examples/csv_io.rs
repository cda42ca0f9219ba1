//! Reads a CSV file, fits on standardized predictors and saves a JSON artifact.
//!
//! `cargo run --release --example csv_io`

use std::fmt::Write as _;

use betalasso::io::{
    read_artifact, read_dataset, write_artifact, ArtifactKind, Provenance, ReadOptions, ResponseColumn, RunArtifact,
};
use betalasso::math::Rng;
use betalasso::simulate::{gen_dataset, SimConfig};
use betalasso::solver::{fit, FitConfig, FitResult};

fn main() -> betalasso::Result<()> {
    let dir = std::env::temp_dir().join("betalasso-example");
    std::fs::create_dir_all(&dir).map_err(|e| betalasso::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let csv = dir.join("data.csv");

    // write some data with a differently scaled column
    let (data, _) = gen_dataset(&mut Rng::new(2, 0), &SimConfig::new(300, 4, 2))?;
    let mut text = String::from("income,age,score,noise,share\n");
    for i in 0..data.n() {
        let x = data.x();
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            1000.0 * x[(i, 0)] + 5000.0,
            x[(i, 1)],
            x[(i, 2)],
            x[(i, 3)],
            data.y()[i]
        );
    }
    std::fs::write(&csv, text).map_err(|e| betalasso::Error::Io {
        path: csv.clone(),
        source: e,
    })?;

    let options = ReadOptions {
        standardize: true,
        ..ReadOptions::new(ResponseColumn::Name("share".into()))
    };
    let loaded = read_dataset(&csv, &options)?;
    let config = FitConfig::with_lambda(0.02);
    let result = fit(&loaded.dataset, &config)?;
    let names = loaded.dataset.feature_names().unwrap_or_default();
    let scaling = loaded.standardization.as_ref().expect("standardized");
    let (b0, beta) = scaling.to_original(result.params.beta0, &result.params.beta);
    println!("original-scale intercept {b0:.4}");
    for (name, b) in names.iter().zip(&beta) {
        println!("  {name:<8} {b:.6}");
    }

    let out = dir.join("fit.json");
    let artifact = RunArtifact::new(ArtifactKind::Fit, &result, Provenance::new(&config, None)?)?;
    write_artifact(&artifact, &out)?;
    let (back, warnings) = read_artifact(&out)?;
    assert!(warnings.is_empty());
    assert_eq!(back.payload_as::<FitResult>()?, result);
    println!(
        "wrote and re-read {} (config hash {})",
        out.display(),
        &back.provenance.config_hash[..12]
    );
    Ok(())
}
