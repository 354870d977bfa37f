//! Mean estimators: 1D median and CDF inversion, cover-based brute force,
//! list decoding with tournament pruning, and the spectral pipeline.

mod brute;
mod cdf1d;
mod cover;
mod listdecode;
mod median;
mod source;
mod spectral;
mod tournament;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_estimate, solve_cover_constraints, BruteForceConfig, BruteForceOutcome};
pub use cdf1d::{cdf_inversion_detailed, cdf_inversion_estimate_1d, cdf_inversion_from_quantile, cdf_inversion_in_place, cdf_inversion_required_n, dkw_sample_size, CdfInversion};
pub use cover::{sphere_cover, sphere_cover_report, CoverReport, MAX_COVER_DIM};
pub use listdecode::{list_decode_candidates, CandidateList, ListDecodeConfig};
pub use median::{coordinate_median, median_1d, median_estimate};
pub use source::{ChunkedDataset, SampleSource, SimulatedSource};
pub use spectral::{spectral_mean_estimate, SpectralConfig, SpectralOutcome, SubspaceBasis};
pub use tournament::{tournament_improve, tournament_detailed, TournamentOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Median,
    Cdf1d,
    BruteForce,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: Vec<f64>,
    pub method: Method,
    /// Samples drawn, visible or missing.
    pub n_used: usize,
    pub subspace_dim: Option<usize>,
    pub diagnostics: BTreeMap<String, f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
