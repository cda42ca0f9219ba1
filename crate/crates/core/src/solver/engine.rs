//! Proximal gradient descent with backtracking on `(β0, β)`.
//!
//! The engine is shared by the Beta regression fit and the penalized logistic
//! initializer. A loss may carry an inner parameter (the Beta precision) that
//! is re-optimized every `inner_every` accepted steps.

use nalgebra::DVector;

use super::scalar;
use crate::error::{Error, Result};
use crate::math::{ln_gamma, mu_pair, shrink};
use crate::model::{self, Dataset};

const MAX_SHRINKS: usize = 100;
// Rounding-level objective increases tolerated before the iteration is
// treated as having reached the objective's resolution.
const MAX_STALLS: usize = 3;

pub(crate) trait SmoothLoss {
    /// Loss at the linear predictor `eta`; may be non-finite.
    fn value(&self, data: &Dataset, eta: &DVector<f64>) -> f64;
    /// Per-observation score factors `r_i`; the gradient is `(1/n) X̃ᵀ r`.
    fn scores(&self, data: &Dataset, eta: &DVector<f64>) -> DVector<f64>;
    /// Re-optimize the inner parameter at fixed `eta`. Must not increase the loss.
    fn refresh(&mut self, _data: &Dataset, _eta: &DVector<f64>) {}
    fn inner(&self) -> f64 {
        0.0
    }
    fn set_inner(&mut self, _value: f64) {}
    /// Typical magnitude of the summed terms, which sets the rounding error of `value`.
    fn magnitude(&self) -> f64 {
        0.0
    }
    /// Magnitude of the inner-parameter derivative, part of the KKT residual.
    fn inner_stationarity(&self, _data: &Dataset, _eta: &DVector<f64>) -> f64 {
        0.0
    }
}

/// Beta negative log-likelihood at a given precision.
pub(crate) struct BetaLoss {
    pub phi: f64,
}

impl SmoothLoss for BetaLoss {
    fn value(&self, data: &Dataset, eta: &DVector<f64>) -> f64 {
        model::nll_from_eta(data, eta, self.phi)
    }

    fn scores(&self, data: &Dataset, eta: &DVector<f64>) -> DVector<f64> {
        model::score_factors(data, eta, self.phi)
    }

    fn refresh(&mut self, data: &Dataset, eta: &DVector<f64>) {
        self.phi = scalar::optimal_phi(data, eta, self.phi);
    }

    fn inner(&self) -> f64 {
        self.phi
    }

    fn magnitude(&self) -> f64 {
        ln_gamma(self.phi).abs()
    }

    fn set_inner(&mut self, value: f64) {
        self.phi = value;
    }

    fn inner_stationarity(&self, data: &Dataset, eta: &DVector<f64>) -> f64 {
        model::phi_derivatives(data, eta, self.phi).0.abs()
    }
}

/// Cross-entropy of the proportions against logistic means.
pub(crate) struct LogisticLoss;

impl SmoothLoss for LogisticLoss {
    fn value(&self, data: &Dataset, eta: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (e, y) in eta.iter().zip(data.y()) {
            // log(1 + e^η) − yη, evaluated without overflow
            let softplus = if *e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            acc += softplus - y * e;
        }
        acc / eta.len() as f64
    }

    fn scores(&self, data: &Dataset, eta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(eta.len(), eta.iter().zip(data.y()).map(|(e, y)| mu_pair(*e).0 - y))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EngineOptions {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub inner_every: usize,
    pub backtrack_factor: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct EngineOutput {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub trace: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stepsize: f64,
}

struct Iterate {
    beta0: f64,
    beta: Vec<f64>,
    eta: DVector<f64>,
    loss: f64,
    grad0: f64,
    grad: Vec<f64>,
}

impl Iterate {
    fn new<L: SmoothLoss>(data: &Dataset, loss: &L, beta0: f64, beta: Vec<f64>) -> Self {
        let eta = model::linear_predictor_raw(data, beta0, &beta);
        let value = loss.value(data, &eta);
        let mut it = Iterate {
            beta0,
            beta,
            eta,
            loss: value,
            grad0: 0.0,
            grad: Vec::new(),
        };
        it.update_gradient(data, loss);
        it
    }

    fn update_gradient<L: SmoothLoss>(&mut self, data: &Dataset, loss: &L) {
        let r = loss.scores(data, &self.eta);
        let (g0, g) = model::design_tr_mul(data, &r, 1.0 / data.n() as f64);
        self.grad0 = g0;
        self.grad = g;
    }

    fn objective(&self, lambda: f64) -> f64 {
        self.loss + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Largest violation of the first-order conditions of `loss + λ‖β‖₁`.
pub(crate) fn kkt_from_gradient(grad0: f64, grad: &[f64], beta: &[f64], lambda: f64, inner: f64) -> f64 {
    let slopes = grad
        .iter()
        .zip(beta)
        .map(|(&g, &b)| {
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max);
    slopes.max(grad0.abs()).max(inner)
}

/// Runs the proximal gradient iteration from `(beta0, beta)` with initial
/// stepsize `stepsize`.
///
/// Each trial step is accepted once the quadratic upper model at the current
/// iterate dominates the loss at the trial point; otherwise the stepsize is
/// multiplied by `backtrack_factor`. The iteration stops once the decrease of
/// the penalized objective falls below `tol` and the KKT residual, taken after
/// a final inner refresh, is at most `10·tol`.
pub(crate) fn run<L: SmoothLoss>(
    data: &Dataset,
    loss: &mut L,
    beta0: f64,
    beta: Vec<f64>,
    stepsize: f64,
    opts: &EngineOptions,
) -> Result<EngineOutput> {
    let lambda = opts.lambda;
    let mut cur = Iterate::new(data, loss, beta0, beta);
    if !cur.loss.is_finite() {
        return Err(Error::Computation(
            "objective is not finite at the initial iterate".into(),
        ));
    }
    let mut s = stepsize;
    let mut trace = vec![cur.objective(lambda)];
    let mut accepted = 0usize;
    let mut converged = false;
    let mut stalls = 0usize;

    while accepted < opts.max_iter {
        let mut shrinks = 0usize;
        let (trial_b0, trial_beta, trial_eta, trial_loss) = loop {
            let b0 = cur.beta0 - s * cur.grad0;
            let beta: Vec<f64> = cur
                .beta
                .iter()
                .zip(&cur.grad)
                .map(|(b, g)| shrink(b - s * g, lambda * s))
                .collect();
            let eta = model::linear_predictor_raw(data, b0, &beta);
            let value = loss.value(data, &eta);
            let d0 = b0 - cur.beta0;
            let mut lin = cur.grad0 * d0;
            let mut sq = d0 * d0;
            for ((nb, ob), g) in beta.iter().zip(&cur.beta).zip(&cur.grad) {
                let d = nb - ob;
                lin += g * d;
                sq += d * d;
            }
            // slack for rounding in the two loss evaluations
            let slack = 32.0 * f64::EPSILON * (cur.loss.abs().max(value.abs()) + loss.magnitude());
            if value.is_finite() && value <= cur.loss + lin + sq / (2.0 * s) + slack {
                break (b0, beta, eta, value);
            }
            s *= opts.backtrack_factor;
            shrinks += 1;
            if shrinks > MAX_SHRINKS {
                // A step below the objective's resolution cannot be certified.
                if sq / (2.0 * s) < 1e-13 * cur.loss.abs().max(1.0) {
                    let kkt = kkt_from_gradient(
                        cur.grad0,
                        &cur.grad,
                        &cur.beta,
                        lambda,
                        loss.inner_stationarity(data, &cur.eta),
                    );
                    return Ok(EngineOutput {
                        beta0: cur.beta0,
                        beta: cur.beta,
                        trace,
                        kkt_residual: kkt,
                        iterations: accepted,
                        converged: kkt <= 10.0 * opts.tol,
                        stepsize: s,
                    });
                }
                return Err(Error::Computation(format!(
                    "backtracking failed to find an acceptable step after {MAX_SHRINKS} reductions"
                )));
            }
        };

        let prev_objective = *trace.last().expect("trace starts non-empty");
        let mut next = Iterate {
            beta0: trial_b0,
            beta: trial_beta,
            eta: trial_eta,
            loss: trial_loss,
            grad0: 0.0,
            grad: Vec::new(),
        };
        let mut refreshed = false;
        let inner_before = loss.inner();
        if (accepted + 1).is_multiple_of(opts.inner_every) {
            loss.refresh(data, &next.eta);
            next.loss = loss.value(data, &next.eta);
            refreshed = true;
        }
        let mut objective = next.objective(lambda);
        if objective > prev_objective {
            // rounding-level increase on a negligible step; retry smaller
            stalls += 1;
            if stalls > MAX_STALLS {
                break;
            }
            s *= opts.backtrack_factor;
            loss.set_inner(inner_before);
            continue;
        }
        accepted += 1;
        if objective < prev_objective {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls > MAX_STALLS {
                trace.push(objective);
                next.update_gradient(data, loss);
                cur = next;
                break;
            }
        }
        let small_decrease = prev_objective - objective < opts.tol;
        if small_decrease && !refreshed {
            loss.refresh(data, &next.eta);
            next.loss = loss.value(data, &next.eta);
            objective = next.objective(lambda);
        }
        next.update_gradient(data, loss);
        trace.push(objective);
        cur = next;
        if !cur.loss.is_finite() {
            return Err(Error::Computation("objective became non-finite".into()));
        }
        if small_decrease {
            let kkt = kkt_from_gradient(
                cur.grad0,
                &cur.grad,
                &cur.beta,
                lambda,
                loss.inner_stationarity(data, &cur.eta),
            );
            if kkt <= 10.0 * opts.tol {
                converged = true;
                break;
            }
        }
    }

    let kkt = kkt_from_gradient(
        cur.grad0,
        &cur.grad,
        &cur.beta,
        lambda,
        loss.inner_stationarity(data, &cur.eta),
    );
    Ok(EngineOutput {
        beta0: cur.beta0,
        beta: cur.beta,
        trace,
        kkt_residual: kkt,
        iterations: accepted,
        converged,
        stepsize: s,
    })
}
