use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::normal;

/// Smallest n with 2 exp(-2 n eta^2) <= tau.
pub fn dkw_sample_size(eta: f64, tau: f64) -> Result<u64> {
    if !(eta > 0.0 && eta < 1.0) || !(tau > 0.0 && tau < 1.0) {
        return Err(domain(format!("DKW needs eta, tau in (0, 1); got {eta}, {tau}")));
    }
    let n = ((2.0 / tau).ln() / (2.0 * eta * eta)).ceil();
    if !(n < 1e18) {
        return Err(Error::Capability(format!("DKW sample size {n:e} is not representable")));
    }
    Ok(n as u64)
}

fn threshold(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    Ok(-(-epsilon).ln_1p() / delta)
}

/// Visible samples needed for accuracy `delta` with failure probability `tau`.
pub fn cdf_inversion_required_n(epsilon: f64, delta: f64, tau: f64) -> Result<u64> {
    let t = threshold(epsilon, delta)?;
    dkw_sample_size(epsilon * normal::cdf(-t), tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfInversion {
    pub estimate: f64,
    /// Empirical Phi(-t) quantile.
    pub u: f64,
    pub t: f64,
    pub level: f64,
    pub required_n: u64,
    pub n: usize,
}

/// u + t with u = F^{-1}(Phi(-t)) for an exact quantile function.
pub fn cdf_inversion_from_quantile<Q: Fn(f64) -> f64>(quantile: Q, epsilon: f64, delta: f64) -> Result<f64> {
    let t = threshold(epsilon, delta)?;
    Ok(quantile(normal::cdf(-t)) + t)
}

/// CDF inversion on a scratch buffer of visible values; reorders it.
pub fn cdf_inversion_in_place(values: &mut [f64], epsilon: f64, delta: f64, tau: f64) -> Result<CdfInversion> {
    let t = threshold(epsilon, delta)?;
    let required_n = cdf_inversion_required_n(epsilon, delta, tau)?;
    let n = values.len();
    if (n as u64) < required_n {
        return Err(Error::InsufficientSamples { required: required_n, available: n as u64 });
    }
    let level = normal::cdf(-t);
    if level * (n as f64) < 1.0 {
        return Err(Error::QuantileUnresolvable { level, n });
    }
    if values.iter().any(|x| x.is_nan()) {
        return Err(domain("values contain NaN"));
    }
    // Left-continuous inverse: the ceil(n p)-th order statistic.
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    let (_, &mut u, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(CdfInversion { estimate: u + t, u, t, level, required_n, n })
}

pub fn cdf_inversion_detailed(values: &[f64], epsilon: f64, delta: f64, tau: f64) -> Result<CdfInversion> {
    cdf_inversion_in_place(&mut values.to_vec(), epsilon, delta, tau)
}

/// 1D mean estimate from visible values (missing removed).
pub fn cdf_inversion_estimate_1d(values: &[f64], epsilon: f64, delta: f64, tau: f64) -> Result<f64> {
    Ok(cdf_inversion_detailed(values, epsilon, delta, tau)?.estimate)
}
