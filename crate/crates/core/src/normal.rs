//! Standard normal helpers: density, tails, quantile and truncated moments.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Phi(x), accurate in the far left tail.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// 1 - Phi(x), accurate in the far right tail.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Phi^{-1}(p) for p in (0, 1).
pub fn quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal mass of [lo, hi], computed from the tail on the side that avoids cancellation.
pub fn interval_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if hi <= 0.0 {
        cdf(hi) - cdf(lo)
    } else if lo >= 0.0 {
        sf(lo) - sf(hi)
    } else {
        1.0 - cdf(lo) - sf(hi)
    }
}

/// E[Z^j] for Z ~ N(0,1), j = 0..=k.
pub fn full_moments(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k + 1];
    m[0] = 1.0;
    for j in 2..=k {
        m[j] = (j - 1) as f64 * m[j - 2];
    }
    m
}

/// Integral of z^j phi(z) over [c, inf) for j = 0..=k; stable for c >= 0.
fn upper_partial(c: f64, k: usize) -> Vec<f64> {
    if c == f64::INFINITY {
        return vec![0.0; k + 1];
    }
    if c == f64::NEG_INFINITY {
        return full_moments(k);
    }
    let phi = pdf(c);
    let mut j_vals = vec![0.0; k + 1];
    j_vals[0] = sf(c);
    if k >= 1 {
        j_vals[1] = phi;
    }
    let mut cpow = 1.0; // c^{j-1}
    for j in 2..=k {
        cpow *= c;
        j_vals[j] = cpow * phi + (j - 1) as f64 * j_vals[j - 2];
    }
    j_vals
}

/// Integral of z^j phi(z) over (-inf, c] for j = 0..=k; stable for c <= 0.
fn lower_partial(c: f64, k: usize) -> Vec<f64> {
    let mut v = upper_partial(-c, k);
    for (j, x) in v.iter_mut().enumerate() {
        if j % 2 == 1 {
            *x = -*x;
        }
    }
    v
}

/// Integral of z^j phi(z) over [lo, hi] for j = 0..=k.
pub fn interval_moments(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![0.0; k + 1];
    }
    if hi <= 0.0 {
        let a = lower_partial(lo, k);
        let b = lower_partial(hi, k);
        b.iter().zip(&a).map(|(b, a)| b - a).collect()
    } else if lo >= 0.0 {
        let a = upper_partial(lo, k);
        let b = upper_partial(hi, k);
        a.iter().zip(&b).map(|(a, b)| a - b).collect()
    } else {
        let full = full_moments(k);
        let a = lower_partial(lo, k);
        let b = upper_partial(hi, k);
        (0..=k).map(|j| full[j] - a[j] - b[j]).collect()
    }
}

/// Integral of x^j phi(x - shift) over [lo, hi] for j = 0..=k.
pub fn shifted_interval_moments(lo: f64, hi: f64, shift: f64, k: usize) -> Vec<f64> {
    let base = interval_moments(lo - shift, hi - shift, k);
    let mut out = vec![0.0; k + 1];
    let mut binom = vec![1.0f64; k + 1];
    for (j, slot) in out.iter_mut().enumerate() {
        // binom[i] = C(j, i) after the update below
        if j > 0 {
            for i in (1..j).rev() {
                binom[i] += binom[i - 1];
            }
            binom[j] = 1.0;
        }
        let mut acc = crate::scalar::CompensatedSum::new();
        let mut spow = 1.0;
        for i in (0..=j).rev() {
            acc.add(binom[i] * spow * base[i]);
            spow *= shift;
        }
        *slot = acc.value();
    }
    out
}
