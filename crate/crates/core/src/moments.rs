//! Moment, Hermite-gap and distance checks for adversaries.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary1D, CouplingPair};
use crate::error::{domain, Error, Result};
use crate::hermite::hermite_normalized;
use crate::model::ContaminationParams;
use crate::normal;
use crate::quadrature::{gauss_hermite_rule, integrate, QuadOptions};
use crate::scalar::{CompensatedSum, Real};

/// (k-1)!! exactly, for even k; 0 otherwise.
pub fn double_factorial_moment(k: usize) -> BigUint {
    if k % 2 == 1 {
        return BigUint::ZERO;
    }
    let mut acc = BigUint::one();
    let mut j = 1u64;
    while (j as usize) < k {
        acc *= j;
        j += 2;
    }
    acc
}

/// E[Z^k] for Z ~ N(0, 1).
pub fn gaussian_raw_moment<T: Real>(k: usize) -> T {
    let v = double_factorial_moment(k);
    T::from_f64(v.to_f64().unwrap_or(f64::INFINITY)).unwrap_or_else(T::infinity)
}

/// E[(Z + delta)^k] by the binomial expansion.
pub fn shifted_gaussian_moment<T: Real>(delta: T, k: usize) -> T {
    let mut acc = CompensatedSum::new();
    let mut binom = T::one();
    for j in 0..=k {
        // C(k, j) delta^{k-j} E[Z^j]
        if j % 2 == 0 {
            acc.add(binom * delta.powi((k - j) as i32) * gaussian_raw_moment::<T>(j));
        }
        binom = binom * T::from_usize(k - j).unwrap() / T::from_usize(j + 1).unwrap();
    }
    acc.value()
}

/// E[g(Z)], Z ~ N(0, 1), by an n-point Gauss-Hermite rule.
pub fn gaussian_expectation<T: Real, G: Fn(T) -> T>(g: G, n: usize) -> Result<T> {
    let (x, w) = gauss_hermite_rule::<T>(n)?;
    Ok(x.iter().zip(&w).map(|(&x, &w)| w * g(x)).collect::<CompensatedSum<T>>().value())
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
}

/// k-th raw moment of f / int f by adaptive quadrature on every piece.
pub fn adversary_moment(adv: &Adversary1D, k: usize) -> Result<f64> {
    let mass = adv.integrate_against(|_| 1.0, quad_opts())?;
    if !(mass > 0.0) {
        return Err(Error::Numeric { message: "adversary has no mass".into(), achieved: mass });
    }
    Ok(adv.integrate_against(|x| x.powi(k as i32), quad_opts())? / mass)
}

/// E_{f / int f}[g] by adaptive quadrature.
pub fn adversary_expectation<G: Fn(f64) -> f64>(adv: &Adversary1D, g: G) -> Result<f64> {
    let mass = adv.integrate_against(|_| 1.0, quad_opts())?;
    Ok(adv.integrate_against(g, quad_opts())? / mass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub orders: Vec<usize>,
    pub target: Vec<f64>,
    pub achieved: Vec<f64>,
    pub residuals: Vec<f64>,
    pub method: MomentMethod,
    /// Monte Carlo standard errors; empty for quadrature.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub standard_errors: Vec<f64>,
}

impl MomentReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a: f64, &b| a.max(b.abs()))
    }
}

/// Normalised moments of `adv` against N(0, 1) for each order.
pub fn moment_report(adv: &Adversary1D, orders: &[usize]) -> Result<MomentReport> {
    let mut achieved = Vec::with_capacity(orders.len());
    for &k in orders {
        achieved.push(adversary_moment(adv, k)?);
    }
    let target: Vec<f64> = orders.iter().map(|&k| gaussian_raw_moment(k)).collect();
    let residuals = achieved.iter().zip(&target).map(|(a, t)| a - t).collect();
    Ok(MomentReport { orders: orders.to_vec(), target, achieved, residuals, method: MomentMethod::Quadrature, standard_errors: Vec::new() })
}

/// Same comparison from `n` censored draws; residuals are compared against standard errors by the caller.
pub fn monte_carlo_moment_report<R: Rng + ?Sized>(adv: &Adversary1D, orders: &[usize], n: usize, rng: &mut R) -> Result<MomentReport> {
    let kmax = orders.iter().copied().max().unwrap_or(0);
    let mut sums = vec![CompensatedSum::new(); kmax + 1];
    let mut sq = vec![CompensatedSum::new(); kmax + 1];
    let mut visible = 0usize;
    for _ in 0..n {
        if let Some(x) = adv.draw(rng) {
            visible += 1;
            let mut p = 1.0;
            for j in 0..=kmax {
                sums[j].add(p);
                sq[j].add(p * p);
                p *= x;
            }
        }
    }
    if visible < 2 {
        return Err(Error::EmptyData("fewer than two visible draws".into()));
    }
    let nv = visible as f64;
    let mut achieved = Vec::new();
    let mut se = Vec::new();
    for &k in orders {
        let m = sums[k].value() / nv;
        let var = (sq[k].value() / nv - m * m).max(0.0);
        achieved.push(m);
        se.push((var / nv).sqrt());
    }
    let target: Vec<f64> = orders.iter().map(|&k| gaussian_raw_moment(k)).collect();
    let residuals = achieved.iter().zip(&target).map(|(a, t)| a - t).collect();
    Ok(MomentReport { orders: orders.to_vec(), target, achieved, residuals, method: MomentMethod::MonteCarlo, standard_errors: se })
}

/// eps / (k+1)^{k/2}, computed in log space.
pub fn hermite_gap_threshold(epsilon: f64, k: usize) -> f64 {
    let kf = k as f64;
    (epsilon.ln() - 0.5 * kf * (kf + 1.0).ln()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentGap {
    /// |E_{f/int f}[X^k] - E_{N(0,1)}[X^k]|.
    pub gap: f64,
    pub pass: bool,
    /// Whether k >= c_order * gamma'^2 for the supplied parameters.
    pub order_sufficient: bool,
}

/// Order-k moment gap of the normalised visible law against N(0, 1); passes when gap > eps.
pub fn verify_moment_gap(params: &ContaminationParams, adv: &Adversary1D, k: usize) -> Result<MomentGap> {
    if k % 2 == 1 {
        return Err(domain(format!("moment gap order must be even, got {k}")));
    }
    let gap = (adversary_moment(adv, k)? - gaussian_raw_moment::<f64>(k)).abs();
    let gp = params.gamma_prime();
    Ok(MomentGap {
        gap,
        pass: gap > params.epsilon,
        order_sufficient: k as f64 >= params.constants.c_order * gp * gp,
    })
}

/// E_{f/int f}[h_t] - E_{N(0,1)}[h_t] for t = 0..=k.
pub fn hermite_gaps(adv: &Adversary1D, k: usize) -> Result<Vec<f64>> {
    let mass = adv.integrate_against(|_| 1.0, quad_opts())?;
    let mut out = Vec::with_capacity(k + 1);
    for t in 0..=k {
        let e = adv.integrate_against(|x| hermite_normalized(t, x), quad_opts())? / mass;
        let reference = gaussian_expectation(|x: f64| hermite_normalized(t, x), k + 2)?;
        out.push(e - reference);
    }
    Ok(out)
}

/// Largest |Hermite gap| over orders 1..=k and where it occurs.
pub fn max_hermite_gap(adv: &Adversary1D, k: usize) -> Result<(usize, f64)> {
    let gaps = hermite_gaps(adv, k)?;
    Ok(gaps
        .iter()
        .enumerate()
        .skip(1)
        .map(|(t, g)| (t, g.abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best }))
}

/// Sub-density on the line with known breakpoints.
pub trait Density1D {
    fn density(&self, x: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64>;
    fn mass(&self) -> f64;
}

impl Density1D for Adversary1D {
    fn density(&self, x: f64) -> f64 {
        Adversary1D::density(self, x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Adversary1D::breakpoints(self)
    }
    fn mass(&self) -> f64 {
        self.total_mass()
    }
}

/// N(mean, 1).
#[derive(Clone, Copy, Debug)]
pub struct UnitGaussian {
    pub mean: f64,
}

impl Density1D for UnitGaussian {
    fn density(&self, x: f64) -> f64 {
        normal::pdf(x - self.mean)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.mean]
    }
    fn mass(&self) -> f64 {
        1.0
    }
}

/// TV between the normalised laws a / int a and b / int b by adaptive quadrature.
pub fn tv_distance_1d(a: &dyn Density1D, b: &dyn Density1D) -> Result<f64> {
    let (ma, mb) = (a.mass(), b.mass());
    if !(ma > 0.0 && mb > 0.0) {
        return Err(domain("densities must have positive mass"));
    }
    let mut bps = a.breakpoints();
    bps.extend(b.breakpoints());
    bps.retain(|x| x.is_finite());
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(bps);
    edges.push(f64::INFINITY);
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 8000 };
    let mut acc = CompensatedSum::new();
    for w in edges.windows(2) {
        let r = integrate(|x| (a.density(x) / ma - b.density(x) / mb).abs(), w[0], w[1], opts)?;
        acc.add(r.value);
    }
    Ok(0.5 * acc.value())
}

/// TV(q1/alpha, q2/alpha) in closed form: (1/alpha)[(1-eps) Phi(-t+delta/2) - Phi(-t-delta/2)].
pub fn coupling_tv_closed_form(pair: &CouplingPair) -> f64 {
    let eps = pair.q1.epsilon();
    let h = pair.q2.base_mean();
    ((1.0 - eps) * normal::cdf(-pair.t + h) - normal::cdf(-pair.t - h)) / pair.alpha
}

/// (eps / 2 alpha)(Phi(-t+delta/2) + Phi(-t-delta/2)): the tail mass scaled by eps.
pub fn coupling_tail_bound(pair: &CouplingPair) -> f64 {
    let eps = pair.q1.epsilon();
    let h = pair.q2.base_mean();
    eps / (2.0 * pair.alpha) * (normal::cdf(-pair.t + h) + normal::cdf(-pair.t - h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorNormCertificate {
    pub bound: f64,
    pub empirical_norm: f64,
    pub pass: bool,
}

/// Checks ||T_t||_F <= (1/(1-eps)) (c1 L)^{t/2} + (1/(1-eps)) exp(c2 t L), L = ln(1/(1-eps)).
pub fn tensor_norm_certificate(params: &ContaminationParams, t: usize, empirical_norm: f64, c1: f64, c2: f64) -> Result<TensorNormCertificate> {
    if t == 0 || !(c1 > 0.0 && c2 > 0.0) {
        return Err(domain("certificate needs t >= 1 and positive constants"));
    }
    let tf = t as f64;
    let keep = 1.0 - params.epsilon;
    let l = -(-params.epsilon).ln_1p();
    let bound = ((c1 * l).powf(tf / 2.0) + (c2 * tf * l).exp()) / keep;
    Ok(TensorNormCertificate { bound, empirical_norm, pass: empirical_norm <= bound })
}

/// Largest n with n * tv < limit.
pub fn le_cam_sample_budget(tv: f64, limit: f64) -> usize {
    if !(tv > 0.0) {
        return usize::MAX;
    }
    let n = (limit / tv).ceil() - 1.0;
    n.max(0.0).min(usize::MAX as f64) as usize
}

/// Error rate of the likelihood-ratio test between q1 and q2 with `n` observations,
/// the truth drawn uniformly per trial. Missing observations carry equal likelihood.
pub fn le_cam_simulation<R: Rng + ?Sized>(pair: &CouplingPair, n: usize, trials: usize, rng: &mut R) -> f64 {
    let mut errors = 0usize;
    for _ in 0..trials {
        let truth_is_q2: bool = rng.random();
        let adv = if truth_is_q2 { &pair.q2 } else { &pair.q1 };
        let mut llr = 0.0; // log q2/q1
        for _ in 0..n {
            if let Some(x) = adv.draw(rng) {
                llr += pair.q2.density(x).ln() - pair.q1.density(x).ln();
            }
        }
        let guess_q2 = if llr == 0.0 { rng.random() } else { llr > 0.0 };
        if guess_q2 != truth_is_q2 {
            errors += 1;
        }
    }
    errors as f64 / trials.max(1) as f64
}
