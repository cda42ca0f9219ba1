//! Monte-Carlo replication harness with Gaussian designs and Beta responses.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference;
use crate::math::{logistic_mu, sample_beta, Rng};
use crate::model::{Dataset, Params};
use crate::solver::{self, FitConfig};

/// Squared Euclidean norm every generated coefficient vector is rescaled to.
pub const BETA_STAR_SQ_NORM: f64 = 13.0 / 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub s_star: usize,
    pub phi_star: f64,
    pub beta0_star: f64,
    pub reps: usize,
    pub seed: u64,
    /// `c` in `λ = c·√(ln p / n)`.
    pub lambda_rule: f64,
    /// `c0` in `λ0 = c0·√(ln p / n)`.
    pub lambda0_rule: f64,
    pub alpha: f64,
    pub run_ci: bool,
    /// Worker threads; `None` uses the global rayon pool. Not echoed in
    /// reports, which do not depend on it.
    pub threads: Option<usize>,
    /// Record wall-clock time per replication. Off by default so reports
    /// are reproducible bit for bit.
    pub timing: bool,
}

impl SimConfig {
    pub fn new(n: usize, p: usize, s_star: usize) -> Self {
        Self {
            n,
            p,
            s_star,
            phi_star: 4.0,
            beta0_star: 0.0,
            reps: 100,
            seed: 1,
            lambda_rule: 0.2,
            lambda0_rule: 0.01,
            alpha: 0.05,
            run_ci: false,
            threads: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::Validation(format!(
                "need n ≥ 2 and p ≥ 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.s_star < 1 || self.s_star > self.p {
            return Err(Error::Validation(format!(
                "s_star must lie in [1, p], got {}",
                self.s_star
            )));
        }
        if self.reps == 0 {
            return Err(Error::Validation("reps must be at least 1".into()));
        }
        if !(self.phi_star > 0.0 && self.phi_star.is_finite()) {
            return Err(Error::Validation(format!(
                "phi_star must be positive, got {}",
                self.phi_star
            )));
        }
        if !self.beta0_star.is_finite() {
            return Err(Error::Validation("beta0_star must be finite".into()));
        }
        if !(self.lambda_rule >= 0.0 && self.lambda_rule.is_finite()) {
            return Err(Error::Validation(format!(
                "lambda_rule must be non-negative, got {}",
                self.lambda_rule
            )));
        }
        if self.run_ci {
            if !(self.lambda0_rule > 0.0 && self.lambda0_rule.is_finite()) {
                return Err(Error::Validation(format!(
                    "lambda0_rule must be positive, got {}",
                    self.lambda0_rule
                )));
            }
            if !(self.alpha > 0.0 && self.alpha < 1.0) {
                return Err(Error::Validation(format!(
                    "alpha must lie in (0, 1), got {}",
                    self.alpha
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Validation("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        ((self.p as f64).ln() / self.n as f64).sqrt()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_rule * self.rate()
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0_rule * self.rate()
    }
}

/// Sparse truth with alternating-sign pairs `±√(1/(j+1))`, truncated to
/// `s_star` entries and rescaled to squared norm 13/6.
pub fn gen_beta_star(p: usize, s_star: usize) -> Result<Vec<f64>> {
    if s_star < 1 || s_star > p {
        return Err(Error::Validation(format!(
            "s_star must lie in [1, p], got s_star = {s_star}, p = {p}"
        )));
    }
    let mut beta = vec![0.0; p];
    for (k, b) in beta.iter_mut().take(s_star).enumerate() {
        let j = (k / 2 + 1) as f64;
        let v = (1.0 / (j + 1.0)).sqrt();
        *b = if k % 2 == 0 { v } else { -v };
    }
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    let scale = (BETA_STAR_SQ_NORM / sq).sqrt();
    for b in beta.iter_mut() {
        *b *= scale;
    }
    Ok(beta)
}

/// Draws one dataset: standard normal design, Beta responses at the truth.
pub fn gen_dataset(rng: &mut Rng, config: &SimConfig) -> Result<(Dataset, Params)> {
    let beta = gen_beta_star(config.p, config.s_star)?;
    let truth = Params::new(config.beta0_star, beta, config.phi_star)?;
    gen_dataset_at(rng, config.n, &truth)
}

/// Draws `n` observations at an arbitrary truth.
pub fn gen_dataset_at(rng: &mut Rng, n: usize, truth: &Params) -> Result<(Dataset, Params)> {
    let p = truth.beta.len();
    // row-major draw order keeps the stream independent of the storage layout
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = rng.standard_normal();
        }
    }
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let eta = truth.beta0 + (0..p).map(|j| x[(i, j)] * truth.beta[j]).sum::<f64>();
        let m = logistic_mu(eta);
        y.push(sample_beta(rng, m.mu * truth.phi, m.one_minus_mu * truth.phi)?);
    }
    Ok((Dataset::new(x, y)?, truth.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub l1_error: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// Fraction of the `p` slope intervals covering the truth.
    pub coverage: Option<f64>,
    /// The same fraction restricted to the true support.
    pub support_coverage: Option<f64>,
    pub active: usize,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub message: String,
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            mean,
            se,
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub l1_error: Option<Summary>,
    pub tpr: Option<Summary>,
    pub fpr: Option<Summary>,
    pub coverage: Option<Summary>,
    pub support_coverage: Option<Summary>,
    pub iterations: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub lambda: f64,
    pub lambda0: Option<f64>,
    pub per_rep: Vec<RepOutcome>,
    pub failures: Vec<RepFailure>,
    pub aggregates: Aggregates,
}

fn aggregate(per_rep: &[RepOutcome]) -> Aggregates {
    let col = |f: &dyn Fn(&RepOutcome) -> Option<f64>| -> Option<Summary> {
        Summary::of(&per_rep.iter().filter_map(f).collect::<Vec<_>>())
    };
    Aggregates {
        l1_error: col(&|r| Some(r.l1_error)),
        tpr: col(&|r| Some(r.tpr)),
        fpr: col(&|r| Some(r.fpr)),
        coverage: col(&|r| r.coverage),
        support_coverage: col(&|r| r.support_coverage),
        iterations: col(&|r| Some(r.iterations as f64)),
    }
}

/// Runs one replication on its own substream.
pub fn run_replication(config: &SimConfig, rep: usize) -> Result<RepOutcome> {
    let start = config.timing.then(Instant::now);
    let mut rng = Rng::new(config.seed, rep as u64);
    let (data, truth) = gen_dataset(&mut rng, config)?;
    let fit = solver::fit(&data, &FitConfig::with_lambda(config.lambda()))?;
    let beta = &fit.params.beta;
    let s = config.s_star;
    let l1_error = beta.iter().zip(&truth.beta).map(|(a, b)| (a - b).abs()).sum();
    let tp = beta[..s].iter().filter(|b| **b != 0.0).count();
    let fp = beta[s..].iter().filter(|b| **b != 0.0).count();
    let tpr = tp as f64 / s as f64;
    let fpr = if config.p > s {
        fp as f64 / (config.p - s) as f64
    } else {
        0.0
    };

    let (coverage, support_coverage) = if config.run_ci {
        let db = inference::debias(&fit, &data, config.lambda0(), config.alpha)?;
        let covers: Vec<bool> = db.intervals[1..]
            .iter()
            .zip(&truth.beta)
            .map(|(&(lo, hi), b)| lo <= *b && *b <= hi)
            .collect();
        let frac = |c: &[bool]| c.iter().filter(|v| **v).count() as f64 / c.len() as f64;
        (Some(frac(&covers)), Some(frac(&covers[..s])))
    } else {
        (None, None)
    };

    Ok(RepOutcome {
        rep,
        l1_error,
        tpr,
        fpr,
        coverage,
        support_coverage,
        active: tp + fp,
        iterations: fit.iterations,
        converged: fit.converged,
        runtime_secs: start.map(|t| t.elapsed().as_secs_f64()),
    })
}

/// Runs `config.reps` independent replications, in parallel, and aggregates
/// them in replication order.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let work = || -> Vec<Result<RepOutcome>> {
        (0..config.reps)
            .into_par_iter()
            .map(|rep| run_replication(config, rep))
            .collect()
    };
    let outcomes = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Computation(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut per_rep = Vec::new();
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => per_rep.push(o),
            Err(e) => {
                log::warn!("replication {rep} failed: {e}");
                failures.push(RepFailure {
                    rep,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(SimReport {
        lambda: config.lambda(),
        lambda0: config.run_ci.then(|| config.lambda0()),
        aggregates: aggregate(&per_rep),
        per_rep,
        failures,
        config: SimConfig {
            threads: None,
            ..config.clone()
        },
    })
}

/// One point for the scaling-law regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingObservation {
    pub s: usize,
    pub n: usize,
    pub p: usize,
    pub l1_error: f64,
}

/// Coefficients of `ln err = γ0 + γ1 ln s + γ2 ln n + γ3 ln ln p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub gamma: [f64; 4],
    pub r_squared: f64,
    pub observations: usize,
}

fn distinct(values: impl Iterator<Item = usize>) -> usize {
    let mut v: Vec<usize> = values.collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Ordinary least squares of log errors on `(1, ln s, ln n, ln ln p)`.
pub fn fit_scaling_law(obs: &[ScalingObservation]) -> Result<ScalingFit> {
    for (name, count) in [
        ("s", distinct(obs.iter().map(|o| o.s))),
        ("n", distinct(obs.iter().map(|o| o.n))),
        ("p", distinct(obs.iter().map(|o| o.p))),
    ] {
        if count < 2 {
            return Err(Error::Validation(format!(
                "scaling regression needs at least two distinct values of {name}"
            )));
        }
    }
    if obs
        .iter()
        .any(|o| !(o.l1_error > 0.0 && o.l1_error.is_finite()) || o.p < 2)
    {
        return Err(Error::Validation(
            "scaling regression needs positive errors and p ≥ 2".into(),
        ));
    }
    let rows: Vec<(Vector4<f64>, f64)> = obs
        .iter()
        .map(|o| {
            let r = Vector4::new(1.0, (o.s as f64).ln(), (o.n as f64).ln(), (o.p as f64).ln().ln());
            (r, o.l1_error.ln())
        })
        .collect();
    let mut xtx = Matrix4::zeros();
    let mut xty = Vector4::zeros();
    for (r, t) in &rows {
        xtx += r * r.transpose();
        xty += r * *t;
    }
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::Computation("scaling regression design is rank deficient".into()))?;
    let g = chol.solve(&xty);
    let mean = rows.iter().map(|(_, t)| t).sum::<f64>() / rows.len() as f64;
    let ss_tot: f64 = rows.iter().map(|(_, t)| (t - mean).powi(2)).sum();
    let ss_res: f64 = rows.iter().map(|(r, t)| (t - r.dot(&g)).powi(2)).sum();
    Ok(ScalingFit {
        gamma: [g[0], g[1], g[2], g[3]],
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        observations: rows.len(),
    })
}

/// Regression over the per-replication errors of a grid of reports.
pub fn scaling_regression(reports: &[SimReport]) -> Result<ScalingFit> {
    let obs: Vec<ScalingObservation> = reports
        .iter()
        .flat_map(|r| {
            r.per_rep.iter().map(|o| ScalingObservation {
                s: r.config.s_star,
                n: r.config.n,
                p: r.config.p,
                l1_error: o.l1_error,
            })
        })
        .collect();
    fit_scaling_law(&obs)
}
