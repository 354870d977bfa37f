use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{domain, Error, Result};

pub const MAX_COVER_DIM: usize = 12;
const BATCH: usize = 10_000;
const MAX_POINTS: usize = 200_000;
const NET_MARGIN: f64 = 0.9;
const NET_SEED: u64 = 0x5eed_c0fe;
const CHECK_SEED: u64 = 0xc4ec_0001;

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    pub vectors: Vec<Vec<f64>>,
    pub xi: f64,
    /// Largest distance from a random unit probe to its nearest cover point.
    pub max_observed_gap: f64,
    /// (1 + 2/xi)^d.
    pub cardinality_bound: f64,
}

fn random_unit<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn nearest_distance(net: &[Vec<f64>], u: &[f64]) -> f64 {
    let best = net.iter().map(|c| super::dot(c, u)).fold(f64::NEG_INFINITY, f64::max);
    (2.0 - 2.0 * best).max(0.0).sqrt()
}

/// Unit vectors within `xi` of every unit vector (exact for d <= 2, randomly verified above).
pub fn sphere_cover(d: usize, xi: f64) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(domain("cover dimension must be at least 1"));
    }
    if d > MAX_COVER_DIM {
        return Err(Error::Capability(format!("sphere cover limited to d <= {MAX_COVER_DIM}, got {d}")));
    }
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(domain(format!("covering radius must lie in (0, 1], got {xi}")));
    }
    match d {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let m = (std::f64::consts::PI / (2.0 * (xi / 2.0).asin())).ceil().max(3.0) as usize;
            Ok((0..m)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        _ => greedy_net(d, xi),
    }
}

/// Greedy net: keeps every random probe farther than 0.9 xi from the net until a full
/// batch of probes is covered. Random probes miss small holes, so the margin keeps them
/// below xi. Separation bounds |C| by (1 + 2/(0.9 xi))^d.
fn greedy_net(d: usize, xi: f64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(NET_SEED ^ (d as u64) ^ xi.to_bits());
    let mut net: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            net.push(e);
        }
    }
    let r = NET_MARGIN * xi;
    let min_dot = 1.0 - r * r / 2.0;
    loop {
        let mut added = 0usize;
        for _ in 0..BATCH {
            let u = random_unit(d, &mut rng);
            if net.iter().all(|c| super::dot(c, &u) < min_dot) {
                net.push(u);
                added += 1;
                if net.len() > MAX_POINTS {
                    return Err(Error::Capability(format!("cover for d = {d}, xi = {xi} exceeds {MAX_POINTS} points")));
                }
            }
        }
        if added == 0 {
            return Ok(net);
        }
    }
}

/// Cover plus an empirical check against 10^4 independent random unit vectors.
pub fn sphere_cover_report(d: usize, xi: f64) -> Result<CoverReport> {
    let vectors = sphere_cover(d, xi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED ^ d as u64);
    let gap = (0..BATCH)
        .map(|_| nearest_distance(&vectors, &random_unit(d, &mut rng)))
        .fold(0.0, f64::max);
    Ok(CoverReport { vectors, xi, max_observed_gap: gap, cardinality_bound: (1.0 + 2.0 / xi).powi(d as i32) })
}
