//! Exhaustive AIC subset selection for a small number of features.

use std::cmp::Ordering;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Dataset, Params};
use crate::solver::{self, FitConfig, InitStrategy};

/// Largest feature count [`exhaustive_aic`] enumerates unless told otherwise.
pub const DEFAULT_P_CAP: usize = 16;

// A subset fit that stalls at rounding level is accepted below this KKT
// residual; the AIC error it leaves is of order n times its square.
const SUBSET_KKT_LIMIT: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFit {
    /// Sorted feature indices into the full design.
    pub subset: Vec<usize>,
    /// Parameters of the restricted model; `beta[k]` belongs to `subset[k]`.
    pub params: Params,
    /// `2 n R_n + 2 (|subset| + 2)`.
    pub aic: f64,
    /// `−n R_n`.
    pub loglik: f64,
}

impl SubsetFit {
    /// Coefficients laid out over all `p` features, zero outside the subset.
    pub fn full_beta(&self, p: usize) -> Vec<f64> {
        let mut beta = vec![0.0; p];
        for (k, &j) in self.subset.iter().enumerate() {
            beta[j] = self.params.beta[k];
        }
        beta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: SubsetFit,
    /// Number of subsets fitted.
    pub visited: usize,
}

fn check_subset(data: &Dataset, subset: &[usize]) -> Result<()> {
    if let Some(&j) = subset.iter().find(|&&j| j >= data.p()) {
        return Err(Error::Validation(format!(
            "feature index {j} out of range for p = {}",
            data.p()
        )));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("subset indices must be strictly increasing".into()));
    }
    if subset.len() + 1 >= data.n() {
        return Err(Error::Validation(format!(
            "subset of size {} is too large for n = {}",
            subset.len(),
            data.n()
        )));
    }
    Ok(())
}

fn check_rank(data: &Dataset) -> Result<()> {
    let ones = vec![1.0; data.n()];
    let gram = model::weighted_gram(data, &ones);
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(min > 1e-10 * max) {
        return Err(Error::Computation("restricted design is singular".into()));
    }
    Ok(())
}

fn finish(data: &Dataset, subset: Vec<usize>, params: Params) -> Result<SubsetFit> {
    let n = data.n() as f64;
    let r = model::neg_log_likelihood(&params, data)?;
    Ok(SubsetFit {
        aic: 2.0 * n * r + 2.0 * (subset.len() + 2) as f64,
        loglik: -n * r,
        subset,
        params,
    })
}

fn fit_restricted(data: &Dataset, subset: &[usize], start: Option<Params>) -> Result<SubsetFit> {
    check_subset(data, subset)?;
    let restricted = data.select_columns(subset)?;
    if subset.is_empty() {
        return finish(&restricted, Vec::new(), solver::null_model(&restricted));
    }
    check_rank(&restricted)?;
    let start = match start {
        Some(p) => p,
        None => solver::null_model(&restricted),
    };
    let config = FitConfig {
        lambda: 0.0,
        init_strategy: InitStrategy::Supplied(start),
        ..FitConfig::default()
    };
    let fit = solver::fit(&restricted, &config)?;
    if !fit.converged && !(fit.kkt_residual <= SUBSET_KKT_LIMIT) {
        return Err(Error::Computation(format!(
            "unpenalized fit on subset {subset:?} did not converge (KKT residual {:e})",
            fit.kkt_residual
        )));
    }
    finish(&restricted, subset.to_vec(), fit.params)
}

/// Unpenalized fit on the features in `subset` (sorted, distinct).
pub fn fit_subset(data: &Dataset, subset: &[usize]) -> Result<SubsetFit> {
    fit_restricted(data, subset, None)
}

fn better(a: &SubsetFit, b: &SubsetFit) -> bool {
    match a.aic.partial_cmp(&b.aic) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => (a.subset.len(), &a.subset) < (b.subset.len(), &b.subset),
    }
}

struct Search<'a> {
    data: &'a Dataset,
    best: Option<SubsetFit>,
    visited: usize,
}

impl Search<'_> {
    fn visit(&mut self, subset: &mut Vec<usize>, start: Option<Params>, next: usize) -> Result<()> {
        let fit = fit_restricted(self.data, subset, start)?;
        self.visited += 1;
        let parent = fit.params.clone();
        if self.best.as_ref().is_none_or(|b| better(&fit, b)) {
            self.best = Some(fit);
        }
        for j in next..self.data.p() {
            subset.push(j);
            // the parent's estimate with the new coefficient at zero
            let mut beta = parent.beta.clone();
            beta.push(0.0);
            let warm = Params::new(parent.beta0, beta, parent.phi)?;
            self.visit(subset, Some(warm), j + 1)?;
            subset.pop();
        }
        Ok(())
    }
}

/// Minimum-AIC subset over all `2^p` feature subsets. Ties go to the smaller
/// subset, then to the lexicographically smaller one.
///
/// Refuses when `p > p_cap`; the number of fits doubles with every feature.
pub fn exhaustive_aic(data: &Dataset, p_cap: usize) -> Result<Selection> {
    if data.p() > p_cap {
        return Err(Error::Validation(format!(
            "exhaustive search over 2^{} subsets exceeds the cap of p = {p_cap}; raise the cap explicitly or use the lasso solution path instead",
            data.p()
        )));
    }
    let mut search = Search {
        data,
        best: None,
        visited: 0,
    };
    search.visit(&mut Vec::new(), None, 0)?;
    Ok(Selection {
        best: search.best.expect("the empty subset is always visited"),
        visited: search.visited,
    })
}
