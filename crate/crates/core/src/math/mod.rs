//! Scalar kernels shared by the model, solver and simulation code.

mod logistic;
mod normal;
mod prox;
mod random;
mod special;

pub use logistic::{logistic_mu, Logistic};
pub use normal::{normal_quantile, two_sided_critical};
pub use prox::soft_threshold;
pub use random::{sample_beta, Rng, Y_EPS};
pub use special::{digamma, log_gamma, trigamma};

pub(crate) use logistic::mu_pair;
pub(crate) use prox::shrink;
pub(crate) use special::{ln_gamma, psi, psi1};
