use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::Dataset;

use super::median::coordinate_median;
use super::l2_dist;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListDecodeConfig {
    /// List length cap is ceil(list_constant / (1 - eps)).
    pub list_constant: f64,
    /// Target radius is radius_constant * sqrt(ln(1/(1 - eps))).
    pub radius_constant: f64,
    pub restarts: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for ListDecodeConfig {
    fn default() -> Self {
        Self { list_constant: 4.0, radius_constant: 3.0, restarts: 16, subsample: 2000, seed: 0x11d0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub candidates: Vec<Vec<f64>>,
    pub target_radius: f64,
    pub max_len: usize,
}

/// Coordinate-median restarts on random subsamples, each refined on the points near it,
/// deduplicated at half the target radius.
pub fn list_decode_candidates(data: &Dataset, epsilon: f64, cfg: &ListDecodeConfig) -> Result<CandidateList> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let n = data.visible_count();
    if n == 0 {
        return Err(Error::EmptyData("list decoding needs visible samples".into()));
    }
    let d = data.dim();
    let target_radius = cfg.radius_constant * (-(-epsilon).ln_1p()).sqrt();
    let max_len = (cfg.list_constant / (1.0 - epsilon)).ceil().max(1.0) as usize;
    if epsilon == 0.0 {
        return Ok(CandidateList { candidates: vec![data.visible_mean()?], target_radius, max_len });
    }
    let rows = data.visible_flat();
    let refine_radius = (d as f64).sqrt() + target_radius;
    let refine = |c: Vec<f64>| -> Result<Vec<f64>> {
        let near: Vec<f64> = rows.chunks_exact(d).filter(|r| l2_dist(r, &c) <= refine_radius).flatten().copied().collect();
        if near.len() / d >= 10 {
            coordinate_median(&near, d)
        } else {
            Ok(c)
        }
    };
    let mut raw = vec![refine(coordinate_median(rows, d)?)?];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.subsample.clamp(1, n);
    let mut buf = Vec::with_capacity(m * d);
    for _ in 0..cfg.restarts {
        buf.clear();
        for _ in 0..m {
            let i = rng.random_range(0..n);
            buf.extend_from_slice(&rows[i * d..(i + 1) * d]);
        }
        raw.push(refine(coordinate_median(&buf, d)?)?);
    }
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for c in raw {
        if candidates.len() >= max_len {
            break;
        }
        if candidates.iter().all(|k| l2_dist(k, &c) > target_radius / 2.0) {
            candidates.push(c);
        }
    }
    Ok(CandidateList { candidates, target_radius, max_len })
}
