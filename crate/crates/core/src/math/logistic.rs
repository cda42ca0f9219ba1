/// The logistic mean map and its first three derivatives at one point.
///
/// `one_minus_mu` is computed directly rather than as `1.0 - mu`, so it keeps
/// full relative precision for large positive arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub mu: f64,
    pub one_minus_mu: f64,
    /// μ' = μ(1 − μ)
    pub d1: f64,
    /// μ'' = μ'(1 − 2μ)
    pub d2: f64,
    /// μ''' = μ'(1 − 2μ)² − 2μ'²
    pub d3: f64,
}

/// Evaluates `μ(z) = exp(z) / (1 + exp(z))` and its derivatives.
///
/// Never overflows: the exponential is always taken of a non-positive number.
pub fn logistic_mu(z: f64) -> Logistic {
    let (mu, one_minus_mu) = mu_pair(z);
    let d1 = mu * one_minus_mu;
    let skew = one_minus_mu - mu;
    Logistic {
        mu,
        one_minus_mu,
        d1,
        d2: d1 * skew,
        d3: d1 * skew * skew - 2.0 * d1 * d1,
    }
}

/// `(μ(z), 1 − μ(z))` without the derivatives.
#[inline]
pub(crate) fn mu_pair(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        let d = 1.0 + e;
        (1.0 / d, e / d)
    } else {
        let e = z.exp();
        let d = 1.0 + e;
        (e / d, 1.0 / d)
    }
}
