//! The Beta regression model with logit mean link and a common precision φ.
//!
//! For observation `i` with linear predictor `η_i = β0 + x_iᵀβ` and mean
//! `μ_i = logistic(η_i)`, the response is `Y_i ~ Beta(μ_iφ, (1 − μ_i)φ)`.
//! [`neg_log_likelihood`] is the average negative log-density over the sample.
//! The intercept is treated as the coefficient of an implicit all-ones column,
//! so every `(β0, β)` block below has length `p + 1` with the intercept first.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln_gamma, mu_pair, psi, psi1, Y_EPS};

/// Predictor matrix and responses in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    log_y: Vec<f64>,
    log_1my: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from an `n × p` predictor matrix and `n` responses.
    ///
    /// Every response must lie in `(ε, 1 − ε)` with `ε = 1e-12`.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::Validation("dataset needs at least one predictor column".into()));
        }
        Self::build(x, y)
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Validation(format!(
                "row {i} has {} entries, expected {p}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]), y)
    }

    pub(crate) fn build(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Validation("dataset needs at least one observation".into()));
        }
        if y.len() != n {
            return Err(Error::Validation(format!(
                "predictor matrix has {n} rows but {} responses were given",
                y.len()
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite predictor at row {}, column {}",
                k % n,
                k / n
            )));
        }
        let bad: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &v)| !(Y_EPS..=1.0 - Y_EPS).contains(&v))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation(format!(
                "responses must lie inside (0, 1) with a margin of 1e-12; offending rows: {bad:?}"
            )));
        }
        let log_y = y.iter().map(|v| v.ln()).collect();
        let log_1my = y.iter().map(|v| (-v).ln_1p()).collect();
        Ok(Self {
            x,
            y,
            log_y,
            log_1my,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Validation(format!(
                "{} feature names given for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// The dataset restricted to the given predictor columns, in the given
    /// order. An empty selection yields an intercept-only design.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.p()) {
            return Err(Error::Validation(format!(
                "column index {bad} out of range for p = {}",
                self.p()
            )));
        }
        let x = self.x.select_columns(columns);
        Ok(Dataset {
            x,
            y: self.y.clone(),
            log_y: self.log_y.clone(),
            log_1my: self.log_1my.clone(),
            feature_names: self
                .feature_names
                .as_ref()
                .map(|names| columns.iter().map(|&c| names[c].clone()).collect()),
        })
    }

    pub(crate) fn log_y(&self) -> &[f64] {
        &self.log_y
    }

    pub(crate) fn log_1my(&self) -> &[f64] {
        &self.log_1my
    }
}

/// The parameter triple `(β0, β, φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub phi: f64,
}

impl Params {
    pub fn new(beta0: f64, beta: Vec<f64>, phi: f64) -> Result<Self> {
        let params = Self { beta0, beta, phi };
        params.check()?;
        Ok(params)
    }

    /// All-zero slopes with the given intercept and precision.
    pub fn null(p: usize, beta0: f64, phi: f64) -> Self {
        Self {
            beta0,
            beta: vec![0.0; p],
            phi,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::Validation(format!(
                "precision phi must be finite and positive, got {}",
                self.phi
            )));
        }
        if !self.beta0.is_finite() || self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Validation("coefficients must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn check_against(&self, data: &Dataset) -> Result<()> {
        self.check()?;
        if self.beta.len() != data.p() {
            return Err(Error::Validation(format!(
                "parameter vector has {} slopes but the dataset has {} predictors",
                self.beta.len(),
                data.p()
            )));
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    /// Indices of the non-zero slopes.
    pub fn active_set(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Gradient of the average negative log-likelihood in all three blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientTriple {
    pub d_beta0: f64,
    pub d_beta: Vec<f64>,
    pub d_phi: f64,
}

impl GradientTriple {
    /// The `(β0, β)` block as one vector, intercept first.
    pub fn coefficient_block(&self) -> Vec<f64> {
        std::iter::once(self.d_beta0)
            .chain(self.d_beta.iter().copied())
            .collect()
    }
}

/// `η = β0 + Xβ`.
pub(crate) fn linear_predictor_raw(data: &Dataset, beta0: f64, beta: &[f64]) -> DVector<f64> {
    let mut eta = DVector::from_element(data.n(), beta0);
    if data.p() > 0 {
        let b = DVector::from_column_slice(beta);
        eta.gemv(1.0, &data.x, &b, 1.0);
    }
    eta
}

/// `Xᵀ r`, prefixed by `Σ r` for the intercept column, both scaled by `scale`.
pub(crate) fn design_tr_mul(data: &Dataset, r: &DVector<f64>, scale: f64) -> (f64, Vec<f64>) {
    let g0 = r.sum() * scale;
    let g = if data.p() > 0 {
        let mut out = DVector::zeros(data.p());
        out.gemv_tr(scale, &data.x, r, 0.0);
        out.as_slice().to_vec()
    } else {
        Vec::new()
    };
    (g0, g)
}

/// Average negative log-likelihood from a precomputed linear predictor.
/// May be non-finite when a mean saturates to 0 or 1.
pub(crate) fn nll_from_eta(data: &Dataset, eta: &DVector<f64>, phi: f64) -> f64 {
    let (ly, l1y) = (data.log_y(), data.log_1my());
    let mut acc = 0.0;
    for i in 0..eta.len() {
        let (mu, omu) = mu_pair(eta[i]);
        let a = mu * phi;
        let b = omu * phi;
        acc += ln_gamma(a) + ln_gamma(b) - (a - 1.0) * ly[i] - (b - 1.0) * l1y[i];
    }
    acc / eta.len() as f64 - ln_gamma(phi)
}

/// Per-observation score factors `r_i = φ μ_i' {[Ψ(μ_iφ) − ln y_i] − [Ψ((1−μ_i)φ) − ln(1−y_i)]}`;
/// the `(β0, β)` gradient of observation `i`'s negative log-density is `r_i (1, x_i)`.
pub(crate) fn score_factors(data: &Dataset, eta: &DVector<f64>, phi: f64) -> DVector<f64> {
    let (ly, l1y) = (data.log_y(), data.log_1my());
    DVector::from_iterator(
        eta.len(),
        (0..eta.len()).map(|i| {
            let (mu, omu) = mu_pair(eta[i]);
            let bracket = (psi(mu * phi) - ly[i]) - (psi(omu * phi) - l1y[i]);
            phi * mu * omu * bracket
        }),
    )
}

/// `(∂R_n/∂φ, ∂²R_n/∂φ²)` at fixed `(β0, β)`.
pub(crate) fn phi_derivatives(data: &Dataset, eta: &DVector<f64>, phi: f64) -> (f64, f64) {
    let (ly, l1y) = (data.log_y(), data.log_1my());
    let (mut d1, mut d2) = (0.0, 0.0);
    for i in 0..eta.len() {
        let (mu, omu) = mu_pair(eta[i]);
        let (a, b) = (mu * phi, omu * phi);
        d1 += mu * (psi(a) - ly[i]) + omu * (psi(b) - l1y[i]);
        d2 += mu * mu * psi1(a) + omu * omu * psi1(b);
    }
    let n = eta.len() as f64;
    (d1 / n - psi(phi), d2 / n - psi1(phi))
}

/// Observation weights `w_i` with `∇²_{β0,β} R_n = (1/n) X̃ᵀ diag(w) X̃`.
pub(crate) fn weights_from_eta(data: &Dataset, eta: &DVector<f64>, phi: f64) -> Vec<f64> {
    let (ly, l1y) = (data.log_y(), data.log_1my());
    (0..eta.len())
        .map(|i| {
            let (mu, omu) = mu_pair(eta[i]);
            let (a, b) = (mu * phi, omu * phi);
            let d1 = mu * omu;
            let d2 = d1 * (omu - mu);
            let bracket = (psi(a) - ly[i]) - (psi(b) - l1y[i]);
            phi * phi * d1 * d1 * (psi1(a) + psi1(b)) + phi * d2 * bracket
        })
        .collect()
}

/// `(1/n) X̃ᵀ diag(w) X̃` with `X̃ = [1, X]`, filled symmetrically.
pub(crate) fn weighted_gram(data: &Dataset, w: &[f64]) -> DMatrix<f64> {
    let n = data.n();
    let p = data.p();
    let inv_n = 1.0 / n as f64;
    let mut h = DMatrix::zeros(p + 1, p + 1);
    h[(0, 0)] = w.iter().sum::<f64>() * inv_n;
    let wx: Vec<Vec<f64>> = (0..p)
        .map(|j| data.x.column(j).iter().zip(w).map(|(x, w)| x * w).collect())
        .collect();
    for j in 0..p {
        let v = wx[j].iter().sum::<f64>() * inv_n;
        h[(0, j + 1)] = v;
        h[(j + 1, 0)] = v;
        for k in j..p {
            let col = data.x.column(k);
            let v = wx[j].iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() * inv_n;
            h[(j + 1, k + 1)] = v;
            h[(k + 1, j + 1)] = v;
        }
    }
    h
}

fn finite_or(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Computation(format!("{what} is not finite")))
    }
}

/// Linear predictor `β0 + Xβ`.
pub fn linear_predictor(params: &Params, data: &Dataset) -> Result<Vec<f64>> {
    params.check_against(data)?;
    Ok(linear_predictor_raw(data, params.beta0, &params.beta)
        .as_slice()
        .to_vec())
}

/// Fitted means `μ_i = logistic(β0 + x_iᵀβ)`.
pub fn mu_vector(params: &Params, data: &Dataset) -> Result<Vec<f64>> {
    params.check_against(data)?;
    let eta = linear_predictor_raw(data, params.beta0, &params.beta);
    Ok(eta.iter().map(|&e| mu_pair(e).0).collect())
}

/// Average negative log-likelihood `R_n(θ)`.
pub fn neg_log_likelihood(params: &Params, data: &Dataset) -> Result<f64> {
    params.check_against(data)?;
    let eta = linear_predictor_raw(data, params.beta0, &params.beta);
    finite_or(nll_from_eta(data, &eta, params.phi), "negative log-likelihood")
}

/// Analytic gradient of [`neg_log_likelihood`] in `(β0, β, φ)`.
pub fn gradient(params: &Params, data: &Dataset) -> Result<GradientTriple> {
    params.check_against(data)?;
    let eta = linear_predictor_raw(data, params.beta0, &params.beta);
    let r = score_factors(data, &eta, params.phi);
    let (d_beta0, d_beta) = design_tr_mul(data, &r, 1.0 / data.n() as f64);
    let (d_phi, _) = phi_derivatives(data, &eta, params.phi);
    let g = GradientTriple { d_beta0, d_beta, d_phi };
    if !g.d_beta0.is_finite() || !g.d_phi.is_finite() || g.d_beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Computation("gradient is not finite".into()));
    }
    Ok(g)
}

/// Per-observation gradients of the negative log-density, one row per
/// observation: columns `(β0, β_1..β_p)` and, with `include_phi`, a trailing
/// φ column. Column means equal [`gradient`].
pub fn per_observation_gradients(params: &Params, data: &Dataset, include_phi: bool) -> Result<DMatrix<f64>> {
    params.check_against(data)?;
    let (n, p) = (data.n(), data.p());
    let phi = params.phi;
    let eta = linear_predictor_raw(data, params.beta0, &params.beta);
    let r = score_factors(data, &eta, phi);
    let cols = p + 1 + usize::from(include_phi);
    let mut g = DMatrix::zeros(n, cols);
    let psi_phi = psi(phi);
    for i in 0..n {
        g[(i, 0)] = r[i];
        for j in 0..p {
            g[(i, j + 1)] = r[i] * data.x[(i, j)];
        }
        if include_phi {
            let (mu, omu) = mu_pair(eta[i]);
            g[(i, p + 1)] = mu * (psi(mu * phi) - data.log_y[i]) + omu * (psi(omu * phi) - data.log_1my[i]) - psi_phi;
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Computation("per-observation gradients are not finite".into()));
    }
    Ok(g)
}

/// The Hessian weights `w_i`, which may be negative away from the optimum.
pub fn hessian_weights(params: &Params, data: &Dataset) -> Result<Vec<f64>> {
    params.check_against(data)?;
    let eta = linear_predictor_raw(data, params.beta0, &params.beta);
    Ok(weights_from_eta(data, &eta, params.phi))
}

/// `(p+1) × (p+1)` Hessian of `R_n` in `(β0, β)` at fixed φ.
pub fn hessian_beta(params: &Params, data: &Dataset) -> Result<DMatrix<f64>> {
    let w = hessian_weights(params, data)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Computation("Hessian weights are not finite".into()));
    }
    Ok(weighted_gram(data, &w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::trigamma;

    fn toy(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = crate::math::Rng::new(seed, 0);
        let x = DMatrix::from_fn(n, p, |_, _| rng.standard_normal());
        let y = (0..n).map(|_| 0.05 + 0.9 * rng.uniform()).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn zero_predictor_gives_half_means() {
        let d = toy(6, 2, 1);
        let mu = mu_vector(&Params::null(2, 0.0, 3.0), &d).unwrap();
        assert!(mu.iter().all(|&m| m == 0.5));
        let mu = mu_vector(&Params::null(2, 1.2, 3.0), &d).unwrap();
        let want = crate::math::logistic_mu(1.2).mu;
        assert!(mu.iter().all(|&m| m == want));
    }

    #[test]
    fn mu_vector_matches_rowwise_evaluation() {
        let d = toy(10, 3, 2);
        let params = Params::new(0.3, vec![0.5, -1.0, 0.25], 5.0).unwrap();
        let mu = mu_vector(&params, &d).unwrap();
        for i in 0..10 {
            let eta: f64 = 0.3 + (0..3).map(|j| d.x()[(i, j)] * params.beta[j]).sum::<f64>();
            assert!((mu[i] - crate::math::logistic_mu(eta).mu).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_density_has_zero_loss() {
        // φ = 2 with μ = ½ is Beta(1, 1)
        let d = toy(17, 3, 3);
        let v = neg_log_likelihood(&Params::null(3, 0.0, 2.0), &d).unwrap();
        assert!(v.abs() < 1e-14, "{v}");
    }

    #[test]
    fn beta_two_two_at_half() {
        let d = Dataset::from_rows(&[vec![0.7]], vec![0.5]).unwrap();
        let v = neg_log_likelihood(&Params::null(1, 0.0, 4.0), &d).unwrap();
        assert!((v + 1.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn loss_is_the_average_of_single_observation_losses() {
        let a = Dataset::from_rows(&[vec![0.3]], vec![0.2]).unwrap();
        let b = Dataset::from_rows(&[vec![-1.1]], vec![0.85]).unwrap();
        let ab = Dataset::from_rows(&[vec![0.3], vec![-1.1]], vec![0.2, 0.85]).unwrap();
        let params = Params::new(0.1, vec![0.7], 6.0).unwrap();
        let va = neg_log_likelihood(&params, &a).unwrap();
        let vb = neg_log_likelihood(&params, &b).unwrap();
        let vab = neg_log_likelihood(&params, &ab).unwrap();
        assert!((vab - 0.5 * (va + vb)).abs() < 1e-14);
    }

    #[test]
    fn symmetric_responses_zero_the_slope_gradient() {
        let x = DMatrix::from_fn(8, 3, |i, j| (i as f64 - 3.5) * (j as f64 + 1.0));
        let d = Dataset::new(x, vec![0.5; 8]).unwrap();
        for phi in [0.5, 4.0, 90.0] {
            let g = gradient(&Params::null(3, 0.0, phi), &d).unwrap();
            assert_eq!(g.d_beta0, 0.0);
            assert!(g.d_beta.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn half_mean_weights_have_closed_form() {
        let x = DMatrix::from_fn(5, 2, |i, j| i as f64 + j as f64);
        let d = Dataset::new(x, vec![0.5; 5]).unwrap();
        let phi = 7.0;
        let w = hessian_weights(&Params::null(2, 0.0, phi), &d).unwrap();
        let want = phi * phi / 16.0 * 2.0 * trigamma(phi / 2.0).unwrap();
        for wi in w {
            assert!((wi - want).abs() < 1e-13 * want);
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let d = toy(40, 6, 5);
        let params = Params::new(-0.2, vec![0.3, 0.0, -0.8, 0.1, 0.05, 1.3], 12.0).unwrap();
        let h = hessian_beta(&params, &d).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn per_observation_rows_average_to_the_gradient() {
        let d = toy(25, 4, 6);
        let params = Params::new(0.4, vec![0.2, -0.5, 0.0, 0.9], 3.5).unwrap();
        let g = gradient(&params, &d).unwrap();
        let rows = per_observation_gradients(&params, &d, true).unwrap();
        let means = rows.row_mean();
        let block = g.coefficient_block();
        for j in 0..5 {
            assert!((means[j] - block[j]).abs() < 1e-13);
        }
        assert!((means[5] - g.d_phi).abs() < 1e-13);

        let single = Dataset::from_rows(&[vec![0.4, 1.0, -2.0, 0.3]], vec![0.33]).unwrap();
        let g1 = gradient(&params, &single).unwrap().coefficient_block();
        let r1 = per_observation_gradients(&params, &single, false).unwrap();
        for j in 0..5 {
            assert!((r1[(0, j)] - g1[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn outer_product_sum_on_small_problem() {
        let d = Dataset::from_rows(
            &[
                vec![0.1, 1.0],
                vec![-0.4, 0.2],
                vec![1.3, -0.7],
                vec![0.0, 0.5],
                vec![-1.0, -1.2],
            ],
            vec![0.2, 0.45, 0.7, 0.61, 0.13],
        )
        .unwrap();
        let params = Params::new(0.1, vec![0.8, -0.3], 5.0).unwrap();
        let rows = per_observation_gradients(&params, &d, false).unwrap();
        let m_hat = rows.transpose() * &rows;
        // hand assembly, one single-observation dataset at a time
        let mut manual = DMatrix::zeros(3, 3);
        for i in 0..5 {
            let xi = d.x().row(i);
            let single = Dataset::from_rows(&[vec![xi[0], xi[1]]], vec![d.y()[i]]).unwrap();
            let gi = DVector::from_vec(gradient(&params, &single).unwrap().coefficient_block());
            manual += &gi * gi.transpose();
        }
        assert!((m_hat - manual).abs().max() < 1e-13);
    }

    #[test]
    fn rejects_out_of_range_responses() {
        let err = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0.5, 1.0]).unwrap_err();
        assert!(err.to_string().contains("[1]"), "{err}");
        assert!(Dataset::from_rows(&[vec![f64::NAN]], vec![0.5]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0]], vec![0.0]).is_err());
    }

    #[test]
    fn rejects_mismatched_params() {
        let d = toy(5, 2, 7);
        assert!(neg_log_likelihood(&Params::null(3, 0.0, 1.0), &d).is_err());
        assert!(Params::new(0.0, vec![1.0], 0.0).is_err());
        assert!(Params::new(f64::NAN, vec![1.0], 1.0).is_err());
    }
}
