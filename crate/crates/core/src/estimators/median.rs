use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Dataset;

use super::{EstimateResult, Method};

/// Median of a scratch buffer; reorders it.
fn median_in_place(xs: &mut [f64]) -> Result<f64> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyData("median of an empty sequence".into()));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(crate::error::domain("median input contains NaN"));
    }
    let (lower, &mut hi, _) = xs.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        return Ok(hi);
    }
    let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 * (lo + hi))
}

/// Sample median; mean of the two central order statistics for even length.
pub fn median_1d(values: &[f64]) -> Result<f64> {
    median_in_place(&mut values.to_vec())
}

/// Coordinate-wise median of row-major rows.
pub fn coordinate_median(rows: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, got: rows.len() });
    }
    let n = rows.len() / dim;
    let mut col = Vec::with_capacity(n);
    (0..dim)
        .map(|j| {
            col.clear();
            col.extend(rows.chunks_exact(dim).map(|r| r[j]));
            median_in_place(&mut col)
        })
        .collect()
}

/// Coordinate-wise median of the visible samples.
pub fn median_estimate(data: &Dataset) -> Result<EstimateResult> {
    let estimate = coordinate_median(data.visible_flat(), data.dim())?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("visible".into(), data.visible_count() as f64);
    Ok(EstimateResult { estimate, method: Method::Median, n_used: data.len(), subspace_dim: None, diagnostics })
}
