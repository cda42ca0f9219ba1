//! Lasso-penalized Beta regression for responses in (0, 1).
//!
//! The mean is logistic in the predictors and the precision φ is a free
//! parameter; the slopes carry an ℓ1 penalty and the intercept does not.
//! [`solver`] fits single penalties and warm-started paths, [`inference`]
//! debiases a fit into confidence intervals, [`selection`] does exhaustive AIC
//! search for small problems and [`simulate`] runs Monte Carlo studies.
// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod inference;
pub mod io;
pub mod math;
pub mod model;
pub mod selection;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
