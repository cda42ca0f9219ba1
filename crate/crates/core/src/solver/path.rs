use serde::{Deserialize, Serialize};

use super::{fit, lambda_max, FitConfig, FitResult, InitStrategy};
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Lower end of the λ grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaFloor {
    Absolute(f64),
    /// Fraction of λ̄.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub n_lambda: usize,
    pub lambda_min: LambdaFloor,
    /// The grid starts at this fraction of λ̄.
    pub lambda_max_fraction: f64,
    /// Settings shared by every fit; `lambda` is ignored and `init_strategy`
    /// only applies to the first grid point.
    pub fit: FitConfig,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            n_lambda: 50,
            lambda_min: LambdaFloor::Absolute(1e-4),
            lambda_max_fraction: 0.95,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub fit: FitResult,
}

impl PathConfig {
    /// The decreasing, log-spaced λ grid for a dataset with the given λ̄.
    pub fn grid(&self, lambda_bar: f64) -> Result<Vec<f64>> {
        if self.n_lambda < 2 {
            return Err(Error::Validation("a path needs at least two lambda values".into()));
        }
        if !(self.lambda_max_fraction > 0.0 && self.lambda_max_fraction.is_finite()) {
            return Err(Error::Validation("lambda_max_fraction must be positive".into()));
        }
        let top = self.lambda_max_fraction * lambda_bar;
        let bottom = match self.lambda_min {
            LambdaFloor::Absolute(v) => v,
            LambdaFloor::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Validation(format!(
                        "lambda_min fraction must lie in (0, 1), got {f}"
                    )));
                }
                f * lambda_bar
            }
        };
        if !(bottom > 0.0 && bottom < top) {
            return Err(Error::Validation(format!(
                "lambda grid is empty: lower end {bottom:e} must be positive and below the upper end {top:e}"
            )));
        }
        let (lt, lb) = (top.ln(), bottom.ln());
        let last = (self.n_lambda - 1) as f64;
        Ok((0..self.n_lambda)
            .map(|k| match k {
                0 => top,
                k if k == self.n_lambda - 1 => bottom,
                k => (lt + (lb - lt) * k as f64 / last).exp(),
            })
            .collect())
    }
}

/// Fits the model along a decreasing λ grid from `lambda_max_fraction·λ̄` down
/// to the floor, warm-starting each fit at the previous solution.
pub fn solution_path(data: &Dataset, config: &PathConfig) -> Result<Vec<PathPoint>> {
    let grid = config.grid(lambda_max(data)?)?;
    let mut points: Vec<PathPoint> = Vec::with_capacity(grid.len());
    for lambda in grid {
        let init_strategy = match points.last() {
            Some(prev) => InitStrategy::Supplied(prev.fit.params.clone()),
            None => config.fit.init_strategy.clone(),
        };
        let cfg = FitConfig {
            lambda,
            init_strategy,
            ..config.fit.clone()
        };
        let result = fit(data, &cfg).map_err(|e| Error::Path {
            lambda,
            source: Box::new(e),
        })?;
        points.push(PathPoint { lambda, fit: result });
    }
    Ok(points)
}

impl PathPoint {
    pub fn coefficients(&self) -> &[f64] {
        &self.fit.params.beta
    }
}
