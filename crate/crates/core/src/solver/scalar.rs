//! One-dimensional minimization used for the precision and intercept updates.

use nalgebra::DVector;

use crate::model::{self, Dataset};

pub(crate) const PHI_MIN: f64 = 1e-4;
pub(crate) const PHI_MAX: f64 = 1e8;
const LOG_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;

/// A smooth function of one variable with value, first and second derivative.
pub(crate) trait Univariate {
    fn value(&self, x: f64) -> f64;
    fn derivs(&self, x: f64) -> (f64, f64);
}

/// `argmin_x f(x)` over `[lo, hi]` by safeguarded Newton from `x0`, falling
/// back to golden-section search when Newton stalls. Never returns a point with
/// a larger value than `x0`.
pub(crate) fn minimize<F: Univariate>(f: &F, x0: f64, lo: f64, hi: f64, xtol: f64, max_step: f64) -> f64 {
    let x0 = x0.clamp(lo, hi);
    let f0 = f.value(x0);
    let mut x = x0;
    let mut fx = f0;
    let mut newton_ok = false;
    for _ in 0..MAX_NEWTON {
        let (d1, d2) = f.derivs(x);
        if !d1.is_finite() || !d2.is_finite() {
            break;
        }
        let raw = if d2 > 0.0 { -d1 / d2 } else { -d1.signum() * max_step };
        let mut step = raw.clamp(-max_step, max_step);
        if x + step < lo {
            step = lo - x;
        }
        if x + step > hi {
            step = hi - x;
        }
        if step.abs() < xtol {
            newton_ok = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand = x + step;
            let fc = f.value(cand);
            if fc.is_finite() && fc <= fx {
                x = cand;
                fx = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step.abs() < xtol {
                break;
            }
        }
        if !accepted {
            // no representable decrease along the Newton direction
            newton_ok = d2 > 0.0;
            break;
        }
    }
    if !newton_ok {
        let g = golden_section(f, lo, hi, xtol);
        let fg = f.value(g);
        if fg.is_finite() && fg < fx {
            x = g;
            fx = fg;
        }
    }
    if fx <= f0 {
        x
    } else {
        x0
    }
}

fn golden_section<F: Univariate>(f: &F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f.value(c);
    let mut fd = f.value(d);
    while (b - a).abs() > xtol {
        // treat non-finite values as +∞
        let lc = if fc.is_finite() { fc } else { f64::INFINITY };
        let ld = if fd.is_finite() { fd } else { f64::INFINITY };
        if lc < ld {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f.value(d);
        }
    }
    0.5 * (a + b)
}

/// `R_n` as a function of `u = ln φ` at a fixed linear predictor.
pub(crate) struct LogPhiProfile<'a> {
    pub data: &'a Dataset,
    pub eta: &'a DVector<f64>,
}

impl Univariate for LogPhiProfile<'_> {
    fn value(&self, u: f64) -> f64 {
        model::nll_from_eta(self.data, self.eta, u.exp())
    }

    fn derivs(&self, u: f64) -> (f64, f64) {
        let phi = u.exp();
        let (d1, d2) = model::phi_derivatives(self.data, self.eta, phi);
        (phi * d1, phi * phi * d2 + phi * d1)
    }
}

/// `argmin_φ R_n(β0, β, φ)` on `[1e-4, 1e8]`, started from `phi0`.
pub(crate) fn optimal_phi(data: &Dataset, eta: &DVector<f64>, phi0: f64) -> f64 {
    let profile = LogPhiProfile { data, eta };
    let u = minimize(&profile, phi0.ln(), PHI_MIN.ln(), PHI_MAX.ln(), LOG_TOL, 2.0);
    u.exp()
}

/// `R_n` as a function of the intercept alone (no slopes), at fixed φ.
struct InterceptProfile<'a> {
    data: &'a Dataset,
    phi: f64,
}

impl InterceptProfile<'_> {
    fn eta(&self, b0: f64) -> DVector<f64> {
        DVector::from_element(self.data.n(), b0)
    }
}

impl Univariate for InterceptProfile<'_> {
    fn value(&self, b0: f64) -> f64 {
        model::nll_from_eta(self.data, &self.eta(b0), self.phi)
    }

    fn derivs(&self, b0: f64) -> (f64, f64) {
        let eta = self.eta(b0);
        let n = self.data.n() as f64;
        let d1 = model::score_factors(self.data, &eta, self.phi).sum() / n;
        let d2 = model::weights_from_eta(self.data, &eta, self.phi).iter().sum::<f64>() / n;
        (d1, d2)
    }
}

/// Intercept-only maximum likelihood `(β0★, φ★)` by alternating one-dimensional
/// minimizations until both coordinates move less than `1e-10`.
pub(crate) fn intercept_only_mle(data: &Dataset) -> (f64, f64) {
    let ybar = data.y().iter().sum::<f64>() / data.n() as f64;
    let mut b0 = (ybar / (1.0 - ybar)).ln();
    let mut phi = optimal_phi(data, &DVector::from_element(data.n(), b0), 1.0);
    for _ in 0..500 {
        let profile = InterceptProfile { data, phi };
        let nb0 = minimize(&profile, b0, -40.0, 40.0, 1e-12, 5.0);
        let nphi = optimal_phi(data, &DVector::from_element(data.n(), nb0), phi);
        let moved = (nb0 - b0).abs().max((nphi.ln() - phi.ln()).abs());
        b0 = nb0;
        phi = nphi;
        if moved < 1e-10 {
            break;
        }
    }
    (b0, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic;
    impl Univariate for Quartic {
        fn value(&self, x: f64) -> f64 {
            (x - 1.5).powi(4) + 0.1 * (x - 1.5).powi(2)
        }
        fn derivs(&self, x: f64) -> (f64, f64) {
            let d = x - 1.5;
            (4.0 * d.powi(3) + 0.2 * d, 12.0 * d * d + 0.2)
        }
    }

    struct Concave;
    impl Univariate for Concave {
        fn value(&self, x: f64) -> f64 {
            -(x * x)
        }
        fn derivs(&self, x: f64) -> (f64, f64) {
            (-2.0 * x, -2.0)
        }
    }

    #[test]
    fn newton_finds_interior_minimum() {
        let x = minimize(&Quartic, -3.0, -10.0, 10.0, 1e-12, 2.0);
        assert!((x - 1.5).abs() < 1e-6, "{x}");
    }

    #[test]
    fn respects_bounds_and_never_increases() {
        let x = minimize(&Concave, 0.3, -2.0, 2.0, 1e-12, 1.0);
        assert!(Concave.value(x) <= Concave.value(0.3));
        assert!((x.abs() - 2.0).abs() < 1e-9);
    }
}
