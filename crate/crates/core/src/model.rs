//! Contamination parameters, observed samples and datasets.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tunable constants behind the derived parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationConstants {
    /// Order constant: k = ceil(c_order * gamma^2), rounded up to even.
    pub c_order: f64,
    /// Threshold divisor: eta = eps / (c_eta * (k+1)^{k/2}).
    pub c_eta: f64,
}

impl Default for DerivationConstants {
    fn default() -> Self {
        Self { c_order: 9.0, c_eta: 1.0 }
    }
}

/// Contamination level, separation and everything derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContaminationParams {
    pub epsilon: f64,
    pub delta: f64,
    pub constants: DerivationConstants,
    /// Tail threshold of the matching adversary.
    pub b: f64,
    /// Distinguishing threshold.
    pub gamma: f64,
    /// Tensor order, even.
    pub k: usize,
    /// Singular-value threshold.
    pub eta: f64,
}

impl ContaminationParams {
    /// Moment-gap threshold (1/delta) ln(1 + 2 eps/(1 - eps)).
    pub fn gamma_prime(&self) -> f64 {
        (2.0 * self.epsilon / (1.0 - self.epsilon)).ln_1p() / self.delta
    }

    /// Fraction of mass kept by the adversary in the worst case.
    pub fn retained_floor(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// Derives B, gamma, k and eta.
pub fn derive_params(epsilon: f64, delta: f64, constants: DerivationConstants) -> Result<ContaminationParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    // Values below 1 are desk-scale calibrations and are accepted.
    if !(constants.c_order > 0.0 && constants.c_order.is_finite()) {
        return Err(domain(format!("order constant must be positive, got {}", constants.c_order)));
    }
    if !(constants.c_eta > 0.0 && constants.c_eta.is_finite()) {
        return Err(domain(format!("threshold constant must be positive, got {}", constants.c_eta)));
    }
    // ln(1 + x/(1-x)) = -ln(1 - x)
    let b = -(-epsilon / 2.0).ln_1p() / delta;
    let gamma = -(-epsilon).ln_1p() / delta;
    let raw = (constants.c_order * gamma * gamma).ceil();
    if !(raw < 1e9) {
        return Err(Error::Capability(format!("tensor order {raw} is not representable")));
    }
    let mut k = (raw as usize).max(1);
    if k % 2 == 1 {
        k += 1;
    }
    let kf = k as f64;
    let eta = (epsilon.ln() - 0.5 * kf * (kf + 1.0).ln() - constants.c_eta.ln()).exp();
    Ok(ContaminationParams { epsilon, delta, constants, b, gamma, k, eta })
}

/// One observation: a visible point or the missingness marker.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservedSample {
    Value(Vec<f64>),
    Missing,
}

/// Observed samples stored flat: visible rows row-major, plus a visibility mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    seed: u64,
    rows: Vec<f64>,
    mask: Vec<bool>,
}

impl Dataset {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dataset dimension must be at least 1"));
        }
        Ok(Self { dim, seed, rows: Vec::new(), mask: Vec::new() })
    }

    pub fn with_capacity(dim: usize, seed: u64, n: usize) -> Result<Self> {
        let mut d = Self::new(dim, seed)?;
        d.rows.reserve(n * dim);
        d.mask.reserve(n);
        Ok(d)
    }

    pub fn from_samples(dim: usize, seed: u64, samples: Vec<ObservedSample>) -> Result<Self> {
        let mut d = Self::with_capacity(dim, seed, samples.len())?;
        for s in samples {
            d.push(s)?;
        }
        Ok(d)
    }

    /// Builds a fully visible dataset from row-major values.
    pub fn from_rows(dim: usize, seed: u64, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: rows.len() });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(domain("visible values must be finite"));
        }
        let n = rows.len() / dim;
        Ok(Self { dim, seed, rows, mask: vec![true; n] })
    }

    pub fn push(&mut self, s: ObservedSample) -> Result<()> {
        match s {
            ObservedSample::Value(v) => self.push_value(&v),
            ObservedSample::Missing => {
                self.push_missing();
                Ok(())
            }
        }
    }

    pub fn push_value(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(domain("visible values must be finite"));
        }
        self.rows.extend_from_slice(v);
        self.mask.push(true);
        Ok(())
    }

    pub fn push_missing(&mut self) {
        self.mask.push(false);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn visible_count(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn missing_count(&self) -> usize {
        self.len() - self.visible_count()
    }

    /// Visible rows in arrival order.
    pub fn visible_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.rows.chunks_exact(self.dim)
    }

    /// Visible values row-major.
    pub fn visible_flat(&self) -> &[f64] {
        &self.rows
    }

    /// All samples in arrival order, `None` for missing.
    pub fn iter(&self) -> impl Iterator<Item = Option<&[f64]>> + '_ {
        let mut rows = self.visible_rows();
        self.mask.iter().map(move |&vis| if vis { rows.next() } else { None })
    }

    /// Visible rows projected on `v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(self.visible_rows().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// Coordinate-wise mean of the visible rows.
    pub fn visible_mean(&self) -> Result<Vec<f64>> {
        let n = self.visible_count();
        if n == 0 {
            return Err(Error::EmptyData("no visible samples".into()));
        }
        let mut acc = vec![crate::scalar::CompensatedSum::new(); self.dim];
        for r in self.visible_rows() {
            for (a, &x) in acc.iter_mut().zip(r) {
                a.add(x);
            }
        }
        Ok(acc.iter().map(|a| a.value() / n as f64).collect())
    }
}

/// Fraction of missing samples: an upper-bound proxy for the corruption level.
pub fn estimate_epsilon(data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData("empty dataset".into()));
    }
    Ok(data.missing_count() as f64 / data.len() as f64)
}

/// Identity-covariance Gaussian N(mean, I).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    mean: Vec<f64>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(domain("mean must have at least one coordinate"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(domain("mean must be finite"));
        }
        Ok(Self { mean })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}
