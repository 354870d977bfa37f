use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hermite::{empirical_hermite_tensor, HermiteConfig};
use crate::model::{derive_params, Dataset, DerivationConstants};

use super::brute::{brute_force_estimate, BruteForceConfig};
use super::listdecode::{list_decode_candidates, CandidateList, ListDecodeConfig};
use super::source::SampleSource;
use super::tournament::tournament_improve;
use super::{dot, EstimateResult, Method};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub constants: DerivationConstants,
    pub tau: f64,
    pub n_list: usize,
    pub n_tournament: usize,
    pub n_tensor: usize,
    pub n_brute: usize,
    pub list_decode: ListDecodeConfig,
    pub brute: BruteForceConfig,
    /// The final search runs at accuracy brute_delta_factor * delta.
    pub brute_delta_factor: f64,
    pub max_subspace_dim: usize,
    pub hermite: HermiteConfig,
    /// Gram-Schmidt drops directions whose residual norm falls below this.
    pub rank_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            constants: DerivationConstants::default(),
            tau: 0.1,
            n_list: 20_000,
            n_tournament: 20_000,
            n_tensor: 100_000,
            n_brute: 1_000_000,
            list_decode: ListDecodeConfig::default(),
            brute: BruteForceConfig::default(),
            brute_delta_factor: 0.5,
            max_subspace_dim: 12,
            hermite: HermiteConfig::default(),
            rank_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    /// Orthonormal basis vectors.
    pub vectors: Vec<Vec<f64>>,
    /// Directions kept per tensor order 1..=k.
    pub retained_per_order: Vec<usize>,
    /// Largest singular value per tensor order 1..=k.
    pub top_singular_values: Vec<f64>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Component of `x` orthogonal to the basis.
    pub fn orthogonal_residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = x.to_vec();
        for v in &self.vectors {
            let c = dot(v, &r);
            r.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralOutcome {
    pub result: EstimateResult,
    pub basis: SubspaceBasis,
    pub warm_start: Vec<f64>,
    pub candidates: CandidateList,
}

/// Left singular vectors of the d x d^{t-1} flattening with singular value above `eta`.
fn leading_left_singular(gram: Vec<f64>, d: usize, eta: f64) -> (Vec<Vec<f64>>, f64) {
    let m = DMatrix::from_row_slice(d, d, &gram);
    let eig = SymmetricEigen::new(m);
    let mut out = Vec::new();
    let mut top = 0.0f64;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let sigma = lam.max(0.0).sqrt();
        top = top.max(sigma);
        if sigma > eta {
            out.push(eig.eigenvectors.column(i).iter().copied().collect());
        }
    }
    (out, top)
}

/// Orthonormalises by pivoted Gram-Schmidt with one re-orthogonalisation pass.
fn orthonormalize(cands: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut rest = cands;
    loop {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (i, c) in rest.iter().enumerate() {
            let mut r = c.clone();
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(b, &r);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let n = dot(&r, &r).sqrt();
            if best.as_ref().is_none_or(|(_, bn, _)| n > *bn) {
                best = Some((i, n, r));
            }
        }
        match best {
            Some((i, n, r)) if n > tol => {
                basis.push(r.into_iter().map(|x| x / n).collect());
                rest.swap_remove(i);
            }
            _ => return basis,
        }
    }
}

/// Warm start from list decoding plus a tournament, then the subspace carrying large
/// Hermite-tensor mass, then the cover-based search inside that subspace.
pub fn spectral_mean_estimate(source: &mut dyn SampleSource, epsilon: f64, delta: f64, cfg: &SpectralConfig) -> Result<SpectralOutcome> {
    let params = derive_params(epsilon, delta, cfg.constants)?;
    let d = source.dim();
    let k = params.k;
    if k > cfg.hermite.max_order || (d as f64).powi(k as i32) > cfg.hermite.max_entries as f64 {
        let mut feasible = 0;
        while feasible < cfg.hermite.max_order && (d as f64).powi(feasible as i32 + 1) <= cfg.hermite.max_entries as f64 {
            feasible += 1;
        }
        return Err(Error::Capability(format!("order-{k} tensors in d = {d} exceed the cap; largest feasible order is {feasible}")));
    }
    if !(cfg.brute_delta_factor > 0.0) {
        return Err(domain("brute_delta_factor must be positive"));
    }
    let mut diagnostics = BTreeMap::new();
    if delta > epsilon {
        diagnostics.insert("warning_delta_exceeds_epsilon".into(), 1.0);
    }

    let list_data = source.draw(cfg.n_list)?;
    let candidates = list_decode_candidates(&list_data, epsilon, &cfg.list_decode)?;
    let tour_data = source.draw(cfg.n_tournament)?;
    let mu0 = tournament_improve(&candidates.candidates, &tour_data, delta)?;

    let tensor_data = source.draw(cfg.n_tensor)?;
    if tensor_data.visible_count() == 0 {
        return Err(Error::EmptyData("tensor stage received no visible samples".into()));
    }
    let centred: Vec<f64> = tensor_data
        .visible_rows()
        .flat_map(|r| r.iter().zip(&mu0).map(|(x, m)| x - m).collect::<Vec<_>>())
        .collect();
    let mut retained = Vec::new();
    let mut per_order = Vec::new();
    let mut tops = Vec::new();
    for t in 1..=k {
        let tensor = empirical_hermite_tensor(&centred, d, t, &cfg.hermite)?;
        let (vecs, top) = leading_left_singular(tensor.flatten()?.gram(), d, params.eta);
        per_order.push(vecs.len());
        tops.push(top);
        retained.extend(vecs);
    }
    let vectors = orthonormalize(retained, cfg.rank_tol);
    if vectors.len() > cfg.max_subspace_dim {
        return Err(Error::SubspaceTooLarge { dim: vectors.len(), max: cfg.max_subspace_dim, eta: params.eta });
    }
    let basis = SubspaceBasis { vectors, retained_per_order: per_order, top_singular_values: tops };

    let mut estimate = mu0.clone();
    if basis.dim() > 0 {
        let brute_data = source.draw(cfg.n_brute)?;
        let r = basis.dim();
        let mut proj = Dataset::with_capacity(r, brute_data.seed(), brute_data.len())?;
        let mut buf = vec![0.0; r];
        let mut shifted = vec![0.0; d];
        for s in brute_data.iter() {
            match s {
                Some(x) => {
                    shifted.iter_mut().zip(x.iter().zip(&mu0)).for_each(|(o, (a, m))| *o = a - m);
                    for (slot, v) in buf.iter_mut().zip(&basis.vectors) {
                        *slot = dot(v, &shifted);
                    }
                    proj.push_value(&buf)?;
                }
                None => proj.push_missing(),
            }
        }
        let inner = brute_force_estimate(&proj, epsilon, cfg.brute_delta_factor * delta, cfg.tau, &cfg.brute)?;
        for (y, v) in inner.result.estimate.iter().zip(&basis.vectors) {
            estimate.iter_mut().zip(v).for_each(|(e, b)| *e += y * b);
        }
        diagnostics.insert("brute_cover_size".into(), inner.directions.len() as f64);
        diagnostics.insert("brute_max_residual".into(), inner.max_residual);
    }

    diagnostics.insert("k".into(), k as f64);
    diagnostics.insert("eta".into(), params.eta);
    diagnostics.insert("list_size".into(), candidates.candidates.len() as f64);
    for (t, (&n, &s)) in basis.retained_per_order.iter().zip(&basis.top_singular_values).enumerate() {
        diagnostics.insert(format!("retained_order_{}", t + 1), n as f64);
        diagnostics.insert(format!("top_singular_order_{}", t + 1), s);
    }
    let result = EstimateResult {
        estimate,
        method: Method::Spectral,
        n_used: source.drawn(),
        subspace_dim: Some(basis.dim()),
        diagnostics,
    };
    Ok(SpectralOutcome { result, basis, warm_start: mu0, candidates })
}
