//! Penalized maximum likelihood for the Beta regression model.
//!
//! [`fit`] minimizes `R_n(θ) + λ‖β‖₁` by proximal gradient steps on the
//! coefficients `(β0, β)` with backtracking, interleaved with exact
//! one-dimensional updates of the precision φ every `phi_update_every`
//! accepted steps. The intercept and φ are never penalized.

mod engine;
mod path;
pub(crate) mod scalar;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Dataset, Params};
use engine::{BetaLoss, EngineOptions, LogisticLoss};

pub use path::{solution_path, LambdaFloor, PathConfig, PathPoint};

/// Above this many coefficients the stepsize falls back to the weight bound
/// instead of an eigen-decomposition of the Hessian.
pub const SPECTRAL_STEPSIZE_LIMIT: usize = 2000;

/// How the first iterate `θ⁽⁰⁾` is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// Unpenalized Beta regression; requires `p < n`.
    UnpenalizedBeta,
    /// ℓ1-penalized logistic regression on the proportions, then the best φ.
    PenalizedLogistic,
    /// Caller-supplied coefficients; φ is re-optimized.
    Supplied(Params),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Number of accepted proximal steps between precision updates.
    pub phi_update_every: usize,
    pub init_strategy: InitStrategy,
    pub backtrack_factor: f64,
    pub stepsize_override: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            tol: 1e-8,
            max_iter: 20_000,
            phi_update_every: 5,
            init_strategy: InitStrategy::PenalizedLogistic,
            backtrack_factor: 0.9,
            stepsize_override: None,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Validation(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Validation(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be positive".into()));
        }
        if self.phi_update_every == 0 {
            return Err(Error::Validation("phi_update_every must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Validation(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if let Some(s) = self.stepsize_override {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Validation(format!(
                    "stepsize override must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Params,
    pub lambda: f64,
    /// Penalized objective after every accepted step, starting at `θ⁽⁰⁾`.
    pub objective_trace: Vec<f64>,
    pub kkt_residual: f64,
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub final_stepsize: f64,
}

/// Largest violation of the optimality conditions of `R_n + λ‖β‖₁` at `params`:
/// `|∇_{β0}|`, `|∇_φ|`, `|∇_j + λ sign β_j|` on the active set and
/// `max(|∇_j| − λ, 0)` elsewhere.
pub fn kkt_residual(params: &Params, data: &Dataset, lambda: f64) -> Result<f64> {
    let g = model::gradient(params, data)?;
    Ok(engine::kkt_from_gradient(
        g.d_beta0,
        &g.d_beta,
        &params.beta,
        lambda,
        g.d_phi.abs(),
    ))
}

/// Intercept-only maximum likelihood estimate `(β0★, 0, φ★)`.
pub fn null_model(data: &Dataset) -> Params {
    let (b0, phi) = scalar::intercept_only_mle(data);
    Params::null(data.p(), b0, phi)
}

/// Smallest λ at which the null model satisfies the optimality conditions:
/// `‖∇_β R_n(β0★, 0, φ★)‖∞`.
pub fn lambda_max(data: &Dataset) -> Result<f64> {
    let null = null_model(data);
    let g = model::gradient(&null, data)?;
    Ok(g.d_beta.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// `argmin_φ R_n(β0, β, φ)` with the coefficients held fixed.
pub fn optimal_phi(params: &Params, data: &Dataset) -> Result<f64> {
    params.check_against(data)?;
    let eta = model::linear_predictor_raw(data, params.beta0, &params.beta);
    Ok(scalar::optimal_phi(data, &eta, params.phi))
}

fn logit_mean(data: &Dataset) -> f64 {
    let ybar = data.y().iter().sum::<f64>() / data.n() as f64;
    (ybar / (1.0 - ybar)).ln()
}

/// Squared spectral norm of `X̃ = [1, X]` by power iteration, inflated by the
/// iteration's relative tolerance so it does not undershoot.
fn design_norm_sq(data: &Dataset) -> f64 {
    let p = data.p();
    let mut v = DVector::from_element(p + 1, 1.0 / ((p + 1) as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..1000 {
        let xv = model::linear_predictor_raw(data, v[0], &v.as_slice()[1..]);
        let (g0, g) = model::design_tr_mul(data, &xv, 1.0);
        let w = DVector::from_iterator(p + 1, std::iter::once(g0).chain(g));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= 1e-12 * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    estimate * (1.0 + 1e-9)
}

/// Reciprocal of the weight bound `max_i w_i ‖X̃‖² / n` on the Hessian norm.
/// Falls back to 1 when no weight is positive.
pub fn stepsize_bound(data: &Dataset, weights: &[f64]) -> f64 {
    let wmax = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(wmax > 0.0) || !wmax.is_finite() {
        return 1.0;
    }
    let bound = wmax * design_norm_sq(data) / data.n() as f64;
    if bound > 0.0 && bound.is_finite() {
        1.0 / bound
    } else {
        1.0
    }
}

fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Initial stepsize `1/‖∇²_{β0,β} R_n(θ⁽⁰⁾)‖`, using the spectral norm for up
/// to [`SPECTRAL_STEPSIZE_LIMIT`] coefficients and the weight bound beyond.
pub fn default_stepsize(data: &Dataset, init: &Params) -> Result<f64> {
    let weights = model::hessian_weights(init, data)?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Ok(1.0);
    }
    if data.p() + 1 > SPECTRAL_STEPSIZE_LIMIT {
        return Ok(stepsize_bound(data, &weights));
    }
    let norm = spectral_norm(&model::weighted_gram(data, &weights));
    Ok(if norm > 0.0 && norm.is_finite() {
        1.0 / norm
    } else {
        1.0
    })
}

/// The stepsize [`fit`] starts from: the override when set, else [`default_stepsize`].
pub fn initial_stepsize(data: &Dataset, init: &Params, config: &FitConfig) -> Result<f64> {
    match config.stepsize_override {
        Some(s) => Ok(s),
        None => default_stepsize(data, init),
    }
}

/// Builds `θ⁽⁰⁾` according to `strategy`. The returned φ always minimizes
/// `R_n` at the returned coefficients.
///
/// `lambda` is the penalty used by the logistic initializer.
pub fn initial_iterate(data: &Dataset, strategy: &InitStrategy, lambda: f64) -> Result<Params> {
    let (beta0, beta) = match strategy {
        InitStrategy::Supplied(params) => {
            params.check_against(data)?;
            (params.beta0, params.beta.clone())
        }
        InitStrategy::UnpenalizedBeta => {
            if data.p() >= data.n() {
                return Err(Error::Strategy(format!(
                    "unpenalized Beta regression needs p < n (p = {}, n = {}); use the logistic initializer",
                    data.p(),
                    data.n()
                )));
            }
            let start = Params::null(data.p(), logit_mean(data), 1.0);
            let phi = optimal_phi(&start, data)?;
            let start = Params { phi, ..start };
            let config = FitConfig {
                lambda: 0.0,
                init_strategy: InitStrategy::Supplied(start.clone()),
                ..FitConfig::default()
            };
            let fitted = run_from(data, start, &config)?;
            (fitted.params.beta0, fitted.params.beta)
        }
        InitStrategy::PenalizedLogistic => {
            let opts = EngineOptions {
                lambda,
                tol: 1e-7,
                max_iter: 5_000,
                inner_every: 1,
                backtrack_factor: 0.9,
            };
            let s = 4.0 * data.n() as f64 / design_norm_sq(data).max(f64::MIN_POSITIVE);
            let out = engine::run(data, &mut LogisticLoss, logit_mean(data), vec![0.0; data.p()], s, &opts)?;
            (out.beta0, out.beta)
        }
    };
    let phi0 = match strategy {
        InitStrategy::Supplied(params) => params.phi,
        _ => 1.0,
    };
    let eta = model::linear_predictor_raw(data, beta0, &beta);
    let phi = scalar::optimal_phi(data, &eta, phi0);
    Params::new(beta0, beta, phi)
}

fn run_from(data: &Dataset, init: Params, config: &FitConfig) -> Result<FitResult> {
    let s = initial_stepsize(data, &init, config)?;
    let opts = EngineOptions {
        lambda: config.lambda,
        tol: config.tol,
        max_iter: config.max_iter,
        inner_every: config.phi_update_every,
        backtrack_factor: config.backtrack_factor,
    };
    let mut loss = BetaLoss { phi: init.phi };
    let out = engine::run(data, &mut loss, init.beta0, init.beta, s, &opts)?;
    let params = Params::new(out.beta0, out.beta, loss.phi)?;
    Ok(FitResult {
        active_set: params.active_set(),
        params,
        lambda: config.lambda,
        objective_trace: out.trace,
        kkt_residual: out.kkt_residual,
        iterations: out.iterations,
        converged: out.converged,
        final_stepsize: out.stepsize,
    })
}

// Above λ̄ the null model is optimal, so return it with exact zeros.
fn null_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let params = null_model(data);
    let objective = model::neg_log_likelihood(&params, data)?;
    Ok(FitResult {
        active_set: Vec::new(),
        kkt_residual: kkt_residual(&params, data, config.lambda)?,
        final_stepsize: initial_stepsize(data, &params, config)?,
        params,
        lambda: config.lambda,
        objective_trace: vec![objective],
        iterations: 0,
        converged: true,
    })
}

/// Minimizes `R_n(θ) + λ‖β‖₁`.
///
/// Returns a result with `converged = false` rather than an error when
/// `max_iter` is exhausted.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if config.lambda > 0.0 && config.lambda >= lambda_max(data)? {
        return null_fit(data, config);
    }
    let init = initial_iterate(data, &config.init_strategy, config.lambda)?;
    run_from(data, init, config)
}
