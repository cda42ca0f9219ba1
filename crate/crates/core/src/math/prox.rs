use crate::error::{Error, Result};

/// Component-wise soft shrinkage `S_τ(z)_j = max(|z_j| − τ, 0)·sign(z_j)`.
///
/// Entries with `|z_j| == τ` map to exactly zero.
pub fn soft_threshold(z: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "soft_threshold requires a finite non-negative threshold, got {tau}"
        )));
    }
    Ok(z.iter().map(|&v| shrink(v, tau)).collect())
}

#[inline]
pub(crate) fn shrink(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}
