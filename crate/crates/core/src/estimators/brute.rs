use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::Dataset;

use super::cdf1d::cdf_inversion_in_place;
use super::cover::sphere_cover;
use super::{dot, EstimateResult, Method};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BruteForceConfig {
    pub cover_radius: f64,
    /// Accuracy passed to each 1D estimate, as a multiple of delta.
    pub inner_delta_factor: f64,
    /// Feasibility slack, as a multiple of delta.
    pub slack_factor: f64,
    pub max_iters: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { cover_radius: 0.5, inner_delta_factor: 1.0, slack_factor: 0.25, max_iters: 50_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceOutcome {
    pub result: EstimateResult,
    pub directions: Vec<Vec<f64>>,
    /// 1D estimate m_v per direction.
    pub projections: Vec<f64>,
    /// max_v |v^T mu_hat - m_v|.
    pub max_residual: f64,
}

fn objective(dirs: &[Vec<f64>], m: &[f64], x: &[f64]) -> (f64, usize, f64) {
    let mut worst = (f64::NEG_INFINITY, 0, 0.0);
    for (i, (v, &mv)) in dirs.iter().zip(m).enumerate() {
        let r = dot(v, x) - mv;
        if r.abs() > worst.0 {
            worst = (r.abs(), i, r.signum());
        }
    }
    worst
}

/// Finds x with max_v |v^T x - m_v| <= slack: least-squares start, then Polyak subgradient steps.
pub fn solve_cover_constraints(dirs: &[Vec<f64>], m: &[f64], slack: f64, max_iters: usize) -> Result<(Vec<f64>, f64)> {
    let d = dirs.first().map(Vec::len).ok_or_else(|| domain("no constraint directions"))?;
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for (v, &mv) in dirs.iter().zip(m) {
        let col = DVector::from_column_slice(v);
        a += &col * col.transpose();
        b += col * mv;
    }
    let mut x: Vec<f64> = match a.cholesky() {
        Some(ch) => ch.solve(&b).iter().copied().collect(),
        None => return Err(Error::Numeric { message: "cover directions do not span the space".into(), achieved: 0.0 }),
    };
    let (mut obj, mut idx, mut sign) = objective(dirs, m, &x);
    let mut best = (obj, x.clone());
    let target = 0.9 * slack;
    for _ in 0..max_iters {
        if best.0 <= slack {
            break;
        }
        // Unit-norm subgradient sign * v_idx.
        let step = obj - target;
        for (xi, vi) in x.iter_mut().zip(&dirs[idx]) {
            *xi -= step * sign * vi;
        }
        (obj, idx, sign) = objective(dirs, m, &x);
        if obj < best.0 {
            best = (obj, x.clone());
        }
    }
    if best.0 > slack {
        return Err(Error::Infeasible { objective: best.0, tolerance: slack });
    }
    Ok((best.1, best.0))
}

/// Cover-based estimator: 1D estimates along every cover direction, then a point consistent with all of them.
pub fn brute_force_estimate(data: &Dataset, epsilon: f64, delta: f64, tau: f64, cfg: &BruteForceConfig) -> Result<BruteForceOutcome> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    if data.visible_count() == 0 {
        return Err(Error::EmptyData("no visible samples".into()));
    }
    let dirs = sphere_cover(data.dim(), cfg.cover_radius)?;
    let tau_v = tau / dirs.len() as f64;
    let inner_delta = cfg.inner_delta_factor * delta;
    let estimates: Vec<Result<f64>> = dirs
        .par_iter()
        .map(|v| {
            let mut proj = data.project(v)?;
            Ok(cdf_inversion_in_place(&mut proj, epsilon, inner_delta, tau_v)?.estimate)
        })
        .collect();
    let m: Vec<f64> = estimates.into_iter().collect::<Result<_>>()?;
    let slack = cfg.slack_factor * delta;
    let (estimate, residual) = solve_cover_constraints(&dirs, &m, slack, cfg.max_iters)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("cover_size".into(), dirs.len() as f64);
    diagnostics.insert("inner_delta".into(), inner_delta);
    diagnostics.insert("max_residual".into(), residual);
    diagnostics.insert("visible".into(), data.visible_count() as f64);
    let result = EstimateResult { estimate, method: Method::BruteForce, n_used: data.len(), subspace_dim: None, diagnostics };
    Ok(BruteForceOutcome { result, directions: dirs, projections: m, max_residual: residual })
}
