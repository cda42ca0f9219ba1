//! Reproducible random streams and Beta variates.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Responses are kept inside `[Y_EPS, 1 − Y_EPS]` so their logs stay finite.
pub const Y_EPS: f64 = 1e-12;

/// A seeded random stream. `(seed, stream_id)` pins the whole draw sequence;
/// distinct stream ids give independent substreams of the same seed.
pub struct Rng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits
            let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang; shapes below one use the
    /// `G(a+1)·U^{1/a}` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}

/// Draws from Beta(a, b) as `G_a / (G_a + G_b)`, clamped to `[Y_EPS, 1 − Y_EPS]`.
pub fn sample_beta(rng: &mut Rng, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!(
            "Beta shapes must be finite and positive, got a={a}, b={b}"
        )));
    }
    let ga = rng.gamma(a);
    let gb = rng.gamma(b);
    let y = if ga + gb > 0.0 { ga / (ga + gb) } else { 0.5 };
    let y = if y.is_nan() { 0.5 } else { y };
    Ok(y.clamp(Y_EPS, 1.0 - Y_EPS))
}
