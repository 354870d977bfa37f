//! Seeded Monte Carlo benchmark: configuration, per-trial records and summaries.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{coupling_pair, moment_matched_adversary, tail_matching_adversary, Adversary1D, HiddenDirectionSampler, MomentMatchConfig};
use crate::error::{domain, Error, Result};
use crate::estimators::{
    brute_force_estimate, cdf_inversion_in_place, median_estimate, spectral_mean_estimate, BruteForceConfig, EstimateResult, ListDecodeConfig, Method,
    SimulatedSource, SpectralConfig,
};
use crate::io::format_float;
use crate::model::{derive_params, ContaminationParams, DerivationConstants};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    master ^ splitmix64(trial)
}

pub fn stage_seed(trial_seed: u64, stage: u64) -> u64 {
    splitmix64(trial_seed ^ splitmix64(stage.wrapping_add(1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    Tail,
    MomentMatched { m: usize },
    Coupling,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Median,
    Cdf1d,
    Brute,
    Spectral,
}

/// Names accepted in `constants`.
pub const KNOWN_CONSTANTS: &[&str] = &[
    "C",
    "C_eta",
    "c_r",
    "c_list",
    "lambda_slack",
    "tau",
    "mean_scale",
    "cover_radius",
    "inner_delta_factor",
    "brute_delta_factor",
    "max_subspace_dim",
    "restarts",
    "subsample",
];

/// Stage names accepted in `n_per_stage`.
pub const KNOWN_STAGES: &[&str] = &["main", "list", "tournament", "tensor", "brute"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub d: usize,
    pub n_per_stage: BTreeMap<String, u64>,
    pub trials: usize,
    pub master_seed: u64,
    pub adversary: AdversarySpec,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// Wall time is written as 0 when false, keeping outputs byte-identical across runs.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for k in self.constants.keys() {
            if !KNOWN_CONSTANTS.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown constant {k:?}; known: {KNOWN_CONSTANTS:?}")));
            }
        }
        for k in self.n_per_stage.keys() {
            if !KNOWN_STAGES.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown stage {k:?}; known: {KNOWN_STAGES:?}")));
            }
        }
        let needed: &[&str] = match self.estimator {
            EstimatorKind::Spectral => &["list", "tournament", "tensor", "brute"],
            _ => &["main"],
        };
        for s in needed {
            if !self.n_per_stage.contains_key(*s) {
                return Err(Error::Parse(format!("n_per_stage lacks {s:?} for this estimator")));
            }
        }
        if self.d == 0 {
            return Err(domain("d must be at least 1"));
        }
        if self.estimator == EstimatorKind::Cdf1d && self.d != 1 {
            return Err(domain("cdf1d needs d = 1"));
        }
        if matches!(self.adversary, AdversarySpec::Coupling) && self.d != 1 {
            return Err(domain("the coupling adversary is one-dimensional"));
        }
        self.params().map(|_| ())
    }

    fn constant(&self, name: &str, default: f64) -> f64 {
        self.constants.get(name).copied().unwrap_or(default)
    }

    fn stage(&self, name: &str) -> usize {
        self.n_per_stage.get(name).copied().unwrap_or(0) as usize
    }

    pub fn params(&self) -> Result<ContaminationParams> {
        derive_params(
            self.epsilon,
            self.delta,
            DerivationConstants { c_order: self.constant("C", 9.0), c_eta: self.constant("C_eta", 1.0) },
        )
    }

    pub fn tau(&self) -> f64 {
        self.constant("tau", 0.1)
    }

    pub fn brute_config(&self) -> BruteForceConfig {
        let def = BruteForceConfig::default();
        BruteForceConfig {
            cover_radius: self.constant("cover_radius", def.cover_radius),
            inner_delta_factor: self.constant("inner_delta_factor", def.inner_delta_factor),
            ..def
        }
    }

    pub fn spectral_config(&self, seed: u64) -> Result<SpectralConfig> {
        let def = SpectralConfig::default();
        let ld = ListDecodeConfig::default();
        Ok(SpectralConfig {
            constants: self.params()?.constants,
            tau: self.tau(),
            n_list: self.stage("list"),
            n_tournament: self.stage("tournament"),
            n_tensor: self.stage("tensor"),
            n_brute: self.stage("brute"),
            list_decode: ListDecodeConfig {
                list_constant: self.constant("c_list", ld.list_constant),
                radius_constant: self.constant("c_r", ld.radius_constant),
                restarts: self.constant("restarts", ld.restarts as f64) as usize,
                subsample: self.constant("subsample", ld.subsample as f64) as usize,
                seed,
            },
            brute: self.brute_config(),
            brute_delta_factor: self.constant("brute_delta_factor", def.brute_delta_factor),
            max_subspace_dim: self.constant("max_subspace_dim", def.max_subspace_dim as f64) as usize,
            ..def
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    /// "ok" or the error kind.
    pub status: String,
    pub true_mean: Vec<f64>,
    pub estimate: Vec<f64>,
    pub error_l2: f64,
    pub subspace_dim: Option<usize>,
    pub missing_fraction: f64,
    pub wall_time_ms: f64,
}

/// Planted instance for one trial.
pub struct TrialInstance {
    pub sampler: HiddenDirectionSampler,
    pub params: ContaminationParams,
}

/// Random direction and mean (stage 0), then the adversary planted along the direction.
pub fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<TrialInstance> {
    let params = cfg.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, 0));
    let d = cfg.d;
    let w: Vec<f64> = if d == 1 {
        vec![1.0]
    } else {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        g.iter().map(|x| x / n).collect()
    };
    let scale = cfg.constant("mean_scale", 1.0);
    let mu: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    let along: f64 = mu.iter().zip(&w).map(|(a, b)| a * b).sum();
    let offset: Vec<f64> = mu.iter().zip(&w).map(|(m, v)| m - along * v).collect();
    let adv: Adversary1D = match cfg.adversary {
        AdversarySpec::Tail => tail_matching_adversary(&params, along)?,
        AdversarySpec::None => Adversary1D::identity(along)?,
        AdversarySpec::MomentMatched { m } => {
            let mm = MomentMatchConfig { slack: cfg.constant("lambda_slack", 0.5), ..Default::default() };
            moment_matched_adversary(&params, m, &mm)?
        }
        AdversarySpec::Coupling => coupling_pair(&params)?.q2,
    };
    let sampler = HiddenDirectionSampler::new(adv, w)?.with_offset(offset)?;
    Ok(TrialInstance { sampler, params })
}

fn estimate_trial(cfg: &ExperimentConfig, inst: &TrialInstance, seed: u64) -> Result<(EstimateResult, f64)> {
    let data_seed = stage_seed(seed, 1);
    let (eps, delta, tau) = (cfg.epsilon, cfg.delta, cfg.tau());
    match cfg.estimator {
        EstimatorKind::Spectral => {
            let sc = cfg.spectral_config(stage_seed(seed, 2))?;
            let mut src = SimulatedSource::new(inst.sampler.clone(), data_seed);
            let out = spectral_mean_estimate(&mut src, eps, delta, &sc)?;
            let missing = src.missing_fraction();
            Ok((out.result, missing))
        }
        est => {
            let data = inst.sampler.sample(cfg.stage("main"), data_seed);
            let missing = data.missing_count() as f64 / data.len().max(1) as f64;
            let result = match est {
                EstimatorKind::Median => median_estimate(&data)?,
                EstimatorKind::Cdf1d => {
                    let mut vals = data.visible_flat().to_vec();
                    let r = cdf_inversion_in_place(&mut vals, eps, delta, tau)?;
                    let mut diagnostics = BTreeMap::new();
                    diagnostics.insert("required_n".into(), r.required_n as f64);
                    diagnostics.insert("u".into(), r.u);
                    EstimateResult { estimate: vec![r.estimate], method: Method::Cdf1d, n_used: data.len(), subspace_dim: None, diagnostics }
                }
                EstimatorKind::Brute => brute_force_estimate(&data, eps, delta, tau, &cfg.brute_config())?.result,
                EstimatorKind::Spectral => unreachable!(),
            };
            Ok((result, missing))
        }
    }
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let seed = trial_seed(cfg.master_seed, trial as u64);
    let start = Instant::now();
    let outcome = build_instance(cfg, seed).and_then(|inst| {
        let truth = inst.sampler.true_mean();
        estimate_trial(cfg, &inst, seed).map(|r| (truth, r))
    });
    let wall = if cfg.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    match outcome {
        Ok((truth, (res, missing))) => {
            let err = truth.iter().zip(&res.estimate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            TrialRecord {
                trial_index: trial,
                seed,
                status: "ok".into(),
                true_mean: truth,
                estimate: res.estimate,
                error_l2: err,
                subspace_dim: res.subspace_dim,
                missing_fraction: missing,
                wall_time_ms: wall,
            }
        }
        Err(e) => TrialRecord {
            trial_index: trial,
            seed,
            status: e.kind().into(),
            true_mean: Vec::new(),
            estimate: Vec::new(),
            error_l2: f64::INFINITY,
            subspace_dim: None,
            missing_fraction: f64::NAN,
            wall_time_ms: wall,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub trials: usize,
    /// Trials with error_l2 <= delta.
    pub successes: usize,
    pub success_rate: f64,
    /// Trials whose estimator returned an error.
    pub failures: usize,
    pub median_error: f64,
    pub q10_error: f64,
    pub q90_error: f64,
    pub max_error: f64,
}

fn quantile_sorted(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs[((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1]
}

pub fn summarize(records: &[TrialRecord], delta: f64) -> BenchSummary {
    let mut errs: Vec<f64> = records.iter().map(|r| r.error_l2).collect();
    errs.sort_by(f64::total_cmp);
    let successes = records.iter().filter(|r| r.error_l2 <= delta).count();
    BenchSummary {
        trials: records.len(),
        successes,
        success_rate: successes as f64 / records.len().max(1) as f64,
        failures: records.iter().filter(|r| r.status != "ok").count(),
        median_error: quantile_sorted(&errs, 0.5),
        q10_error: quantile_sorted(&errs, 0.1),
        q90_error: quantile_sorted(&errs, 0.9),
        max_error: errs.last().copied().unwrap_or(f64::NAN),
    }
}

/// Runs every trial; output order and bytes do not depend on `threads`.
pub fn run_bench(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<(Vec<TrialRecord>, BenchSummary)> {
    cfg.validate()?;
    let run = || (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect::<Vec<_>>();
    let records = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Capability(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let summary = summarize(&records, cfg.delta);
    Ok((records, summary))
}

fn write_config_header<W: Write>(cfg: &ExperimentConfig, w: &mut W) -> Result<()> {
    writeln!(w, "# config={}", serde_json::to_string(cfg)?)?;
    let p = cfg.params()?;
    writeln!(w, "# derived b={} gamma={} k={} eta={:e}", format_float(p.b), format_float(p.gamma), p.k, p.eta)?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(";")
}

pub fn write_trials_csv<W: Write>(cfg: &ExperimentConfig, records: &[TrialRecord], mut w: W) -> Result<()> {
    write_config_header(cfg, &mut w)?;
    writeln!(w, "trial_index,seed,status,error_l2,subspace_dim,missing_fraction,wall_time_ms,true_mean,estimate")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.trial_index,
            r.seed,
            r.status,
            format_float(r.error_l2),
            r.subspace_dim.map(|d| d.to_string()).unwrap_or_default(),
            format_float(r.missing_fraction),
            format_float(r.wall_time_ms),
            join(&r.true_mean),
            join(&r.estimate)
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(cfg: &ExperimentConfig, s: &BenchSummary, mut w: W) -> Result<()> {
    write_config_header(cfg, &mut w)?;
    writeln!(w, "trials,successes,success_rate,failures,median_error,q10_error,q90_error,max_error")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        s.trials,
        s.successes,
        format_float(s.success_rate),
        s.failures,
        format_float(s.median_error),
        format_float(s.q10_error),
        format_float(s.q90_error),
        format_float(s.max_error)
    )?;
    Ok(())
}
