//! Debiased coefficients and confidence intervals for a lasso fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::two_sided_critical;
use crate::model::{self, Dataset};
use crate::solver::FitResult;

/// Fits whose KKT residual exceeds this are not treated as optima.
pub const KKT_LIMIT: f64 = 1e-3;
/// Per-row growth factor of λ0 when a row cannot meet its constraint.
pub const ESCALATION_FACTOR: f64 = 1.5;
pub const MAX_ESCALATIONS: usize = 10;

/// Subgradient `ẑ` of `‖β‖₁` implied by the optimality conditions, with the
/// intercept entry first and fixed at 0.
pub fn kkt_subgradient(fit: &FitResult, data: &Dataset) -> Result<Vec<f64>> {
    if fit.lambda <= 0.0 {
        return Err(Error::Inference(
            "the fit is unpenalized; there is no subgradient to invert".into(),
        ));
    }
    if !(fit.kkt_residual <= KKT_LIMIT) {
        return Err(Error::Inference(format!(
            "fit is not optimal enough for inference (KKT residual {:e} > {KKT_LIMIT:e})",
            fit.kkt_residual
        )));
    }
    let g = model::gradient(&fit.params, data)?;
    let mut z = Vec::with_capacity(g.d_beta.len() + 1);
    z.push(0.0);
    z.extend(g.d_beta.iter().map(|d| (-d / fit.lambda).clamp(-1.0, 1.0)));
    Ok(z)
}

/// Output of [`approximate_inverse`]. Row `j` of `omega` is `m_j`, with
/// `‖Σ m_j − e_j‖∞ ≤ lambda0[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateInverse {
    pub omega: DMatrix<f64>,
    /// λ0 finally used for each row after escalation.
    pub lambda0: Vec<f64>,
    /// Achieved `‖Σ m_j − e_j‖∞` per row.
    pub violation: Vec<f64>,
}

impl ApproximateInverse {
    pub fn max_violation(&self) -> f64 {
        self.violation.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_lambda0(&self) -> f64 {
        self.lambda0.iter().fold(0.0, |m, v| m.max(*v))
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn row_violation(sigma: &DMatrix<f64>, m: &DVector<f64>, i: usize) -> f64 {
    let r = sigma * m;
    r.iter()
        .enumerate()
        .map(|(k, v)| if k == i { (v - 1.0).abs() } else { v.abs() })
        .fold(0.0, f64::max)
}

/// Minimizes `½ mᵀΣm − m_i + μ‖m‖₁` by cyclic coordinate descent. Any
/// minimizer has `‖Σm − e_i‖∞ ≤ μ`. When the diagonal start already meets
/// the constraint it is returned as is.
fn inverse_row(sigma: &DMatrix<f64>, i: usize, mu: f64) -> DVector<f64> {
    let d = sigma.nrows();
    let sii = sigma[(i, i)];
    let rho = (0..d)
        .filter(|&k| k != i)
        .map(|k| sigma[(i, k)].abs())
        .fold(0.0, f64::max)
        / sii;
    let mu0 = rho / (1.0 + rho);
    let mut m = DVector::zeros(d);
    m[i] = (1.0 - mu0) / sii;
    if mu >= mu0 {
        return m;
    }
    // off-diagonal part of Σm
    let mut offdiag = DVector::zeros(d);
    for k in 0..d {
        if k != i {
            offdiag[k] = sigma[(k, i)] * m[i];
        }
    }
    let max_sweeps = (10 * d * d).max(1000);
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        let mut scale = 0.0f64;
        for j in 0..d {
            let old = m[j];
            let target = if j == i { 1.0 } else { 0.0 };
            let new = soft(target - offdiag[j], mu) / sigma[(j, j)];
            if new != old {
                let delta = new - old;
                for k in 0..d {
                    if k != j {
                        offdiag[k] += sigma[(k, j)] * delta;
                    }
                }
                m[j] = new;
                change = change.max(delta.abs());
            }
            scale = scale.max(new.abs());
        }
        if change <= 1e-13 * scale.max(1e-300) {
            break;
        }
    }
    m
}

/// Row-wise approximate inverse of a symmetric matrix under an entrywise
/// constraint `‖Σ m_j − e_j‖∞ ≤ λ0`. A row that misses the constraint is
/// recomputed with λ0 grown by 1.5, at most ten times.
pub fn approximate_inverse(sigma: &DMatrix<f64>, lambda0: f64) -> Result<ApproximateInverse> {
    let d = sigma.nrows();
    if sigma.ncols() != d {
        return Err(Error::Validation(format!(
            "matrix must be square, got {}×{}",
            d,
            sigma.ncols()
        )));
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::Validation(format!("lambda0 must be positive, got {lambda0}")));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let mut omega = DMatrix::zeros(d, d);
    let mut lambdas = Vec::with_capacity(d);
    let mut violations = Vec::with_capacity(d);
    for i in 0..d {
        if !(sigma[(i, i)] > 0.0) {
            return Err(Error::Inference(format!(
                "column {i}: diagonal entry {} is not positive",
                sigma[(i, i)]
            )));
        }
        let mut mu = lambda0;
        let mut found = None;
        for _ in 0..=MAX_ESCALATIONS {
            // aim slightly inside the box so a converged iterate meets it
            let m = inverse_row(sigma, i, mu * (1.0 - 1e-3));
            let v = row_violation(sigma, &m, i);
            if v <= mu && m.iter().all(|x| x.is_finite()) {
                found = Some((m, v));
                break;
            }
            mu *= ESCALATION_FACTOR;
        }
        let (m, v) = found.ok_or_else(|| {
            Error::Inference(format!(
                "column {i}: constraint infeasible up to lambda0 = {:e}",
                mu / ESCALATION_FACTOR
            ))
        })?;
        omega.set_row(i, &m.transpose());
        lambdas.push(mu);
        violations.push(v);
    }
    Ok(ApproximateInverse {
        omega,
        lambda0: lambdas,
        violation: violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasResult {
    /// Lasso estimate `(β̂0, β̂)`.
    pub estimate: Vec<f64>,
    /// `(β̂0, β̂) + λ Ω̂ ẑ`.
    pub debiased: Vec<f64>,
    pub subgradient: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    /// Achieved `max_j ‖Σ̂ m_j − e_j‖∞`.
    pub omega_constraint_violation: f64,
    /// Largest λ0 used across rows after escalation.
    pub lambda0: f64,
    pub lambda0_requested: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Rows of Ω̂.
    pub omega: Vec<Vec<f64>>,
}

/// Debiased estimate with sandwich standard errors `diag(Ω̂M̂Ω̂ᵀ)/n`, where
/// `M̂` is the mean outer product of per-observation gradients and Ω̂
/// approximately inverts the `(β0, β)` Hessian at the fit.
pub fn debias(fit: &FitResult, data: &Dataset, lambda0: f64, alpha: f64) -> Result<DebiasResult> {
    let crit = two_sided_critical(alpha)?;
    let z = kkt_subgradient(fit, data)?;
    let params = &fit.params;
    let hessian = model::hessian_beta(params, data)?;
    let inv = approximate_inverse(&hessian, lambda0)?;
    let omega = &inv.omega;

    let zv = DVector::from_vec(z.clone());
    let correction = omega * &zv * fit.lambda;
    let mut estimate = Vec::with_capacity(params.beta.len() + 1);
    estimate.push(params.beta0);
    estimate.extend_from_slice(&params.beta);
    let debiased: Vec<f64> = estimate.iter().zip(correction.iter()).map(|(e, c)| e + c).collect();

    let n = data.n() as f64;
    let g = model::per_observation_gradients(params, data, false)?;
    let m_hat = g.tr_mul(&g) / n;
    let cov = omega * m_hat * omega.transpose() / n;
    let std_errors: Vec<f64> = (0..cov.nrows()).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let intervals = debiased
        .iter()
        .zip(&std_errors)
        .map(|(c, se)| (c - crit * se, c + crit * se))
        .collect();

    Ok(DebiasResult {
        estimate,
        debiased,
        subgradient: z,
        std_errors,
        intervals,
        omega_constraint_violation: inv.max_violation(),
        lambda0: inv.max_lambda0(),
        lambda0_requested: lambda0,
        alpha,
        lambda: fit.lambda,
        omega: (0..omega.nrows())
            .map(|i| omega.row(i).iter().copied().collect())
            .collect(),
    })
}
