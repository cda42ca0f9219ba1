//! Log-gamma, digamma and trigamma on the positive real axis.
//!
//! The checked functions (`log_gamma`, `digamma`, `trigamma`) validate their
//! argument. The crate-internal `ln_gamma`, `psi` and `psi1` skip validation
//! and are what the likelihood hot loops call; they return a non-finite value
//! for a zero argument rather than an error.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

// Lanczos approximation with g = 671/128 and 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_SER0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// Below this, digamma/trigamma are shifted upward by recurrence before the
/// asymptotic series is applied.
const ASYMPTOTIC_FROM: f64 = 8.0;

fn check_positive(name: &str, z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} requires a finite positive argument, got {z}"
        )))
    }
}

/// Natural log of the gamma function, `ln Γ(z)` for `z > 0`.
pub fn log_gamma(z: f64) -> Result<f64> {
    check_positive("log_gamma", z)?;
    Ok(ln_gamma(z))
}

/// Digamma function `Ψ(z) = d/dz ln Γ(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    check_positive("digamma", z)?;
    Ok(psi(z))
}

/// Trigamma function `Ψ'(z)` for `z > 0`. Always positive.
pub fn trigamma(z: f64) -> Result<f64> {
    check_positive("trigamma", z)?;
    Ok(psi1(z))
}

#[inline]
pub(crate) fn ln_gamma(z: f64) -> f64 {
    if z <= 0.0 {
        return f64::INFINITY;
    }
    let tmp = z + LANCZOS_G;
    let tmp = (z + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_SER0;
    let mut y = z;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (SQRT_TWO_PI * ser / z).ln()
}

#[inline]
pub(crate) fn psi(z: f64) -> f64 {
    if z <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut x = z;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    // Bernoulli-number tail: B_2k / (2k x^2k), k = 1..7
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r * (1.0 / 12.0)))))));
    acc + x.ln() - 0.5 / x - tail
}

#[inline]
pub(crate) fn psi1(z: f64) -> f64 {
    if z <= 0.0 {
        return f64::INFINITY;
    }
    let mut x = z;
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let r = inv * inv;
    let tail = inv
        * r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * (7.0 / 6.0)))))));
    acc + inv + 0.5 * r + tail
}
