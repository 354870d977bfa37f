//! Command-line front end: adversary generation, verification, simulation,
//! estimation, benchmarking and the two-point distance bound.
//!
//! Exit codes: 0 success, 2 usage or malformed input, 3 certification failure,
//! 4 capability guard, 5 numeric failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use realcon::adversary::{coupling_pair, moment_matched_adversary, tail_matching_adversary, HiddenDirectionSampler, MomentMatchConfig};
use realcon::estimators::{
    brute_force_estimate, cdf_inversion_detailed, median_estimate, spectral_mean_estimate, BruteForceConfig, ChunkedDataset, EstimateResult, Method,
    SpectralConfig,
};
use realcon::harness::{run_bench, write_summary_csv, write_trials_csv, ExperimentConfig};
use realcon::io::{read_json, read_samples_file, write_samples_file, DatasetMeta};
use realcon::model::estimate_epsilon;
use realcon::moments::{coupling_tail_bound, coupling_tv_closed_form, le_cam_sample_budget, moment_report, monte_carlo_moment_report, tv_distance_1d};
use realcon::{derive_params, Adversary1D, DerivationConstants, Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "realcon", version, about = "Gaussian mean estimation under realizable contamination")]
#[command(after_help = "Exit codes: 0 ok, 2 usage/input, 3 certification failure, 4 capability guard, 5 numeric failure")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdvKind {
    Tail,
    MomentMatched,
    CouplingQ1,
    CouplingQ2,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Median,
    Cdf1d,
    Brute,
    Spectral,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an adversary and write it as JSON.
    GenAdversary {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        /// Moments to match; implies --kind moment-matched.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum)]
        kind: Option<AdvKind>,
        /// Clean mean for tail and identity adversaries (default: delta).
        #[arg(long)]
        base_mean: Option<f64>,
        /// Bound |p| <= slack * eps on the Legendre correction.
        #[arg(long, default_value_t = 0.5)]
        slack: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare normalised moments of an adversary against N(0, 1) and check the sandwich.
    Verify {
        #[arg(long)]
        adversary: PathBuf,
        /// Orders as "1..4" or "1,2,4".
        #[arg(long)]
        orders: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        sandwich_tol: f64,
        /// Also run a Monte Carlo check with this many draws (pass within 4 standard errors).
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw censored samples with the adversary planted along a direction.
    Simulate {
        /// Adversary JSON, or "none" for uncorrupted N(mean * v, I).
        #[arg(long)]
        adversary: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// "random", "e1", or comma-separated coordinates of a unit vector.
        #[arg(long, default_value = "e1")]
        direction: String,
        /// Clean mean along the direction when --adversary none.
        #[arg(long, default_value_t = 0.0)]
        mean: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the mean of a sample CSV and print the result as JSON.
    Estimate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "in")]
        input: PathBuf,
        /// Contamination level; defaults to the missing fraction.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long = "C", default_value_t = 9.0)]
        c_order: f64,
        #[arg(long = "C-eta", default_value_t = 1.0)]
        c_eta: f64,
        /// Spectral stage sizes as fractions of the file: list,tournament,tensor,brute.
        #[arg(long, default_value = "0.05,0.05,0.2,0.7")]
        stage_split: String,
        #[arg(long, default_value_t = 0.5)]
        brute_delta_factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo benchmark from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Per-trial CSV; the summary goes next to it with a .summary.csv suffix.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Distance between the two coupled adversaries and the matching sample budget.
    TvBound {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: Option<u64>,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_orders(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("bad order list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}")))).collect()
}

fn direction(spec: &str, d: usize, seed: u64) -> Result<Vec<f64>> {
    match spec {
        "e1" => {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            Ok(v)
        }
        "random" => {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1ec_7104);
            let g: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(g.iter().map(|x| x / n).collect())
        }
        other => {
            let v = parse_floats(other)?;
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            Ok(v)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenAdversary { eps, delta, m, kind, base_mean, slack, out } => {
            let params = derive_params(eps, delta, DerivationConstants::default())?;
            let kind = kind.unwrap_or(if m.is_some() { AdvKind::MomentMatched } else { AdvKind::Tail });
            let base = base_mean.unwrap_or(delta);
            let adv = match kind {
                AdvKind::Tail => tail_matching_adversary(&params, base)?,
                AdvKind::Identity => Adversary1D::identity(base)?,
                AdvKind::MomentMatched => {
                    let m = m.ok_or_else(|| Error::Parse("moment-matched adversary needs --m".into()))?;
                    moment_matched_adversary(&params, m, &MomentMatchConfig { slack, ..Default::default() })?
                }
                AdvKind::CouplingQ1 => coupling_pair(&params)?.q1,
                AdvKind::CouplingQ2 => coupling_pair(&params)?.q2,
            };
            emit(&adv, out.as_deref())
        }
        Cmd::Verify { adversary, orders, tol, sandwich_tol, mc, seed, out } => {
            let adv: Adversary1D = read_json(&adversary)?;
            let orders = parse_orders(&orders)?;
            let report = moment_report(&adv, &orders)?;
            let sandwich = adv.check_sandwich(&adv.sandwich_grid(10_000));
            let mc_report = match mc {
                Some(n) => Some(monte_carlo_moment_report(&adv, &orders, n, &mut ChaCha8Rng::seed_from_u64(seed))?),
                None => None,
            };
            #[derive(Serialize)]
            struct Verification<'a> {
                quadrature: &'a realcon::moments::MomentReport,
                sandwich: realcon::adversary::SandwichReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                monte_carlo: Option<&'a realcon::moments::MomentReport>,
            }
            emit(&Verification { quadrature: &report, sandwich, monte_carlo: mc_report.as_ref() }, out.as_deref())?;
            if report.max_residual() > tol {
                return Err(Error::Certification(format!("moment residual {:e} exceeds {tol:e}", report.max_residual())));
            }
            if !sandwich.holds(sandwich_tol) {
                return Err(Error::Certification(format!("sandwich violated near x = {}", sandwich.worst_x)));
            }
            if let Some(r) = &mc_report {
                if r.residuals.iter().zip(&r.standard_errors).any(|(e, s)| e.abs() > 4.0 * s) {
                    return Err(Error::Certification("Monte Carlo moments outside 4 standard errors".into()));
                }
            }
            Ok(())
        }
        Cmd::Simulate { adversary, d, direction: dir, mean, n, seed, out } => {
            if d == 0 {
                return Err(Error::Domain("d must be at least 1".into()));
            }
            let adv = if adversary == "none" { Adversary1D::identity(mean)? } else { read_json(Path::new(&adversary))? };
            let v = direction(&dir, d, seed)?;
            let sampler = HiddenDirectionSampler::new(adv, v.clone())?;
            let data = sampler.sample(n, seed);
            write_samples_file(&data, &out)?;
            let mut meta = DatasetMeta::of(&data);
            meta.true_mean = Some(sampler.true_mean());
            meta.direction = Some(v);
            let mut meta_path = out.into_os_string();
            meta_path.push(".meta.json");
            realcon::io::write_json(&meta, Path::new(&meta_path))
        }
        Cmd::Estimate { method, input, eps, delta, tau, c_order, c_eta, stage_split, brute_delta_factor, out } => {
            let data = read_samples_file(&input)?;
            let eps = match eps {
                Some(e) => e,
                None => estimate_epsilon(&data)?,
            };
            let need_delta = || delta.ok_or_else(|| Error::Parse("this method needs --delta".into()));
            let result: EstimateResult = match method {
                MethodArg::Median => median_estimate(&data)?,
                MethodArg::Cdf1d => {
                    if data.dim() != 1 {
                        return Err(Error::Domain("cdf1d needs one-dimensional data".into()));
                    }
                    let r = cdf_inversion_detailed(data.visible_flat(), eps, need_delta()?, tau)?;
                    let mut diagnostics = std::collections::BTreeMap::new();
                    diagnostics.insert("required_n".into(), r.required_n as f64);
                    diagnostics.insert("u".into(), r.u);
                    diagnostics.insert("t".into(), r.t);
                    diagnostics.insert("epsilon".into(), eps);
                    EstimateResult { estimate: vec![r.estimate], method: Method::Cdf1d, n_used: data.len(), subspace_dim: None, diagnostics }
                }
                MethodArg::Brute => brute_force_estimate(&data, eps, need_delta()?, tau, &BruteForceConfig::default())?.result,
                MethodArg::Spectral => {
                    let fr = parse_floats(&stage_split)?;
                    if fr.len() != 4 || fr.iter().any(|f| *f < 0.0) || fr.iter().sum::<f64>() > 1.0 + 1e-12 {
                        return Err(Error::Parse("--stage-split needs four non-negative fractions summing to at most 1".into()));
                    }
                    let n = data.len() as f64;
                    let cfg = SpectralConfig {
                        constants: DerivationConstants { c_order, c_eta },
                        tau,
                        n_list: (fr[0] * n) as usize,
                        n_tournament: (fr[1] * n) as usize,
                        n_tensor: (fr[2] * n) as usize,
                        n_brute: (fr[3] * n) as usize,
                        brute_delta_factor,
                        ..Default::default()
                    };
                    let mut src = ChunkedDataset::new(data);
                    spectral_mean_estimate(&mut src, eps, need_delta()?, &cfg)?.result
                }
            };
            emit(&result, out.as_deref())
        }
        Cmd::Bench { config, out, threads } => {
            let cfg: ExperimentConfig = read_json(&config)?;
            let (records, summary) = run_bench(&cfg, threads)?;
            write_trials_csv(&cfg, &records, BufWriter::new(File::create(&out)?))?;
            let summary_path = out.with_extension("summary.csv");
            write_summary_csv(&cfg, &summary, BufWriter::new(File::create(&summary_path)?))?;
            emit(&summary, None)
        }
        Cmd::TvBound { eps, delta, n } => {
            let params = derive_params(eps, delta, DerivationConstants::default())?;
            let pair = coupling_pair(&params)?;
            let tv = coupling_tv_closed_form(&pair);
            let quad = tv_distance_1d(&pair.q1, &pair.q2)?;
            #[derive(Serialize)]
            struct TvReport {
                epsilon: f64,
                delta: f64,
                t: f64,
                alpha: f64,
                tv: f64,
                tv_quadrature: f64,
                tail_bound: f64,
                /// Largest n with n * tv < 0.2.
                n_budget: usize,
                #[serde(skip_serializing_if = "Option::is_none")]
                n_times_tv: Option<f64>,
            }
            emit(
                &TvReport {
                    epsilon: eps,
                    delta,
                    t: pair.t,
                    alpha: pair.alpha,
                    tv,
                    tv_quadrature: quad,
                    tail_bound: coupling_tail_bound(&pair),
                    n_budget: le_cam_sample_budget(tv, 0.2),
                    n_times_tv: n.map(|n| n as f64 * tv),
                },
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
