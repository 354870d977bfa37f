//! Piecewise adversarial densities f with (1 - eps) p <= f <= p and censored sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::legendre::{gram_matrix, legendre_series, solve_moment_system};
use crate::model::{ContaminationParams, Dataset};
use crate::normal::{self, interval_mass, pdf, shifted_interval_moments};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    ScaledGaussian,
    ScaledGaussianPlusLegendre,
}

/// One piece: scale * phi(x - shift) on [lo, hi], optionally plus
/// sum_k coeffs[k-1] P_k(x - centre) with centre the interval midpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    #[serde(with = "bound")]
    pub lo: f64,
    #[serde(with = "bound")]
    pub hi: f64,
    pub kind: PieceKind,
    pub scale: f64,
    pub shift: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<f64>,
}

impl Piece {
    pub fn gaussian(lo: f64, hi: f64, scale: f64, shift: f64) -> Self {
        Self { lo, hi, kind: PieceKind::ScaledGaussian, scale, shift, coeffs: Vec::new() }
    }

    fn centre(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn correction(&self, x: f64) -> f64 {
        match self.kind {
            PieceKind::ScaledGaussian => 0.0,
            PieceKind::ScaledGaussianPlusLegendre => legendre_series(&self.coeffs, x - self.centre()),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.scale * pdf(x - self.shift) + self.correction(x)
    }

    /// Mass; Legendre terms of order >= 1 integrate to zero on their window.
    pub fn mass(&self) -> f64 {
        self.scale * interval_mass(self.lo - self.shift, self.hi - self.shift)
    }

    /// int x^j f over the piece, j = 0..=k, in closed form.
    pub fn raw_moments(&self, k: usize) -> Vec<f64> {
        let mut out: Vec<f64> = shifted_interval_moments(self.lo, self.hi, self.shift, k)
            .into_iter()
            .map(|v| self.scale * v)
            .collect();
        if self.kind == PieceKind::ScaledGaussianPlusLegendre && k >= 1 {
            let m = self.coeffs.len();
            let g = gram_matrix::<f64>(k.max(m));
            // int y^i sum_l a_l P_l(y) dy over [-1, 1], i = 0..=k
            let poly_mom: Vec<f64> = (0..=k)
                .map(|i| if i == 0 { 0.0 } else { (0..m).map(|l| g[i - 1][l] * self.coeffs[l]).sum() })
                .collect();
            let c = self.centre();
            for (j, slot) in out.iter_mut().enumerate() {
                let mut binom = 1.0;
                let mut acc = CompensatedSum::new();
                for i in 0..=j {
                    // C(j, i) c^{j-i}
                    acc.add(binom * c.powi((j - i) as i32) * poly_mom[i]);
                    binom = binom * (j - i) as f64 / (i + 1) as f64;
                }
                *slot += acc.value();
            }
        }
        out
    }
}

/// Serialises infinite interval endpoints as the strings "-inf" / "inf".
mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad interval endpoint {other:?}"))),
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    base_mean: f64,
    epsilon: f64,
    pieces: Vec<Piece>,
    #[serde(default)]
    #[allow(dead_code)]
    total_mass: Option<f64>,
}

/// Sub-density f of the visible samples, clean distribution N(base_mean, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdversary")]
pub struct Adversary1D {
    base_mean: f64,
    epsilon: f64,
    pieces: Vec<Piece>,
    total_mass: f64,
}

impl TryFrom<RawAdversary> for Adversary1D {
    type Error = Error;

    fn try_from(r: RawAdversary) -> Result<Self> {
        Adversary1D::new(r.base_mean, r.epsilon, r.pieces)
    }
}

impl Adversary1D {
    /// Validates that the pieces partition the real line in order.
    pub fn new(base_mean: f64, epsilon: f64, pieces: Vec<Piece>) -> Result<Self> {
        if !base_mean.is_finite() {
            return Err(domain("base mean must be finite"));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
        }
        if pieces.is_empty() {
            return Err(domain("adversary needs at least one piece"));
        }
        if pieces[0].lo != f64::NEG_INFINITY || pieces[pieces.len() - 1].hi != f64::INFINITY {
            return Err(domain("pieces must cover the whole line"));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(domain(format!("pieces not contiguous at {} / {}", w[0].hi, w[1].lo)));
            }
        }
        for p in &pieces {
            if !(p.lo < p.hi) || !p.scale.is_finite() || p.scale < 0.0 || !p.shift.is_finite() {
                return Err(domain(format!("invalid piece {p:?}")));
            }
            match p.kind {
                PieceKind::ScaledGaussian if !p.coeffs.is_empty() => {
                    return Err(domain("plain Gaussian piece carries Legendre coefficients"));
                }
                PieceKind::ScaledGaussianPlusLegendre => {
                    if ((p.hi - p.lo) - 2.0).abs() > 1e-12 || p.coeffs.iter().any(|c| !c.is_finite()) {
                        return Err(domain("Legendre window must have width 2 and finite coefficients"));
                    }
                }
                _ => {}
            }
        }
        let total_mass = pieces.iter().map(Piece::mass).collect::<CompensatedSum<f64>>().value();
        Ok(Self { base_mean, epsilon, pieces, total_mass })
    }

    /// f = p: no contamination.
    pub fn identity(base_mean: f64) -> Result<Self> {
        Self::new(base_mean, 0.0, vec![Piece::gaussian(f64::NEG_INFINITY, f64::INFINITY, 1.0, base_mean)])
    }

    pub fn base_mean(&self) -> f64 {
        self.base_mean
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Finite piece boundaries in order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.hi < x);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn density(&self, x: f64) -> f64 {
        self.piece_at(x).density(x)
    }

    pub fn clean_density(&self, x: f64) -> f64 {
        pdf(x - self.base_mean)
    }

    /// f(x)/p(x), evaluated without forming either density in the far tails.
    pub fn retention(&self, x: f64) -> f64 {
        let p = self.piece_at(x);
        let m = self.base_mean;
        let s = p.shift;
        let mut r = p.scale * (-0.5 * (m - s) * (2.0 * x - s - m)).exp();
        if p.kind == PieceKind::ScaledGaussianPlusLegendre {
            r += p.correction(x) / pdf(x - m);
        }
        r
    }

    /// int x^j f, j = 0..=k, in closed form (not normalised).
    pub fn raw_moments(&self, k: usize) -> Vec<f64> {
        let mut acc = vec![CompensatedSum::new(); k + 1];
        for p in &self.pieces {
            for (a, v) in acc.iter_mut().zip(p.raw_moments(k)) {
                a.add(v);
            }
        }
        acc.iter().map(CompensatedSum::value).collect()
    }

    /// int g f over the line by adaptive quadrature on every piece.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, g: G, opts: QuadOptions) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for p in &self.pieces {
            let r = integrate(|x| g(x) * p.density(x), p.lo, p.hi, opts)?;
            acc.add(r.value);
        }
        Ok(acc.value())
    }

    /// Evenly spaced grid covering every breakpoint with a 10-unit margin, plus the breakpoints.
    pub fn sandwich_grid(&self, n: usize) -> Vec<f64> {
        let bps = self.breakpoints();
        let lo = bps.iter().copied().fold(self.base_mean, f64::min) - 10.0;
        let hi = bps.iter().copied().fold(self.base_mean, f64::max) + 10.0;
        let n = n.max(2);
        let mut g: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        // lo + (hi - lo) can round below hi.
        g[n - 1] = hi;
        g.extend(bps);
        g.sort_by(f64::total_cmp);
        g
    }

    /// Largest violations of f <= p and (1 - eps) p <= f on `grid` (positive means violated).
    pub fn check_sandwich(&self, grid: &[f64]) -> SandwichReport {
        let mut rep = SandwichReport { upper_violation: f64::NEG_INFINITY, lower_violation: f64::NEG_INFINITY, worst_x: f64::NAN };
        let mut worst = f64::NEG_INFINITY;
        for &x in grid {
            let f = self.density(x);
            let p = self.clean_density(x);
            let up = f - p;
            let low = (1.0 - self.epsilon) * p - f;
            rep.upper_violation = rep.upper_violation.max(up);
            rep.lower_violation = rep.lower_violation.max(low);
            if up.max(low) > worst {
                worst = up.max(low);
                rep.worst_x = x;
            }
        }
        rep
    }

    /// Keeps x with probability f(x)/p(x).
    pub fn censor<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Option<f64> {
        let u: f64 = rng.random();
        (u < self.retention(x)).then_some(x)
    }

    /// One 1D observation: x ~ N(base_mean, 1), then censoring.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let z: f64 = rng.sample(StandardNormal);
        self.censor(self.base_mean + z, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub upper_violation: f64,
    pub lower_violation: f64,
    pub worst_x: f64,
}

impl SandwichReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.upper_violation <= tol && self.lower_violation <= tol
    }
}

/// Tail-matching adversary: clean N(base_mean, 1), visible part matching
/// (1 - eps/2) N(base_mean - delta, 1) on the central interval.
pub fn tail_matching_adversary(params: &ContaminationParams, base_mean: f64) -> Result<Adversary1D> {
    let eps = params.epsilon;
    let delta = params.delta;
    let b = params.b;
    let a = 1.0 - eps / 2.0;
    // Symmetric frame: p+ = N(delta/2), p- = N(-delta/2); shifted so p+ becomes N(base_mean).
    let lower_tail = normal::cdf(-b + delta / 2.0);
    let upper_tail_minus = normal::cdf(-b - delta / 2.0);
    let lambda = (a * (lower_tail + upper_tail_minus) - upper_tail_minus) / lower_tail;
    if !(lambda >= 1.0 - eps && lambda <= 1.0) {
        return Err(Error::ConstructionInfeasible(format!(
            "right-tail scale {lambda} outside [1 - eps, 1] = [{}, 1]",
            1.0 - eps
        )));
    }
    let off = base_mean - delta / 2.0;
    let pieces = vec![
        Piece::gaussian(f64::NEG_INFINITY, -b + off, 1.0, base_mean),
        Piece::gaussian(-b + off, b + off, a, base_mean - delta),
        Piece::gaussian(b + off, f64::INFINITY, lambda, base_mean),
    ];
    let adv = Adversary1D::new(base_mean, eps, pieces)?;
    let err = (adv.total_mass() - a).abs();
    if err > 1e-10 {
        return Err(Error::Numeric { message: "tail adversary mass differs from 1 - eps/2".into(), achieved: err });
    }
    Ok(adv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentMatchConfig {
    /// Correction must satisfy |p| <= slack * eps on its window.
    pub slack: f64,
    /// Grid size for the sup and sandwich checks on the window.
    pub grid_points: usize,
    /// Tolerance on the sandwich check.
    pub sandwich_tol: f64,
    /// Tolerance on the post-solve moment residuals.
    pub residual_tol: f64,
}

impl Default for MomentMatchConfig {
    fn default() -> Self {
        Self { slack: 0.5, grid_points: 4001, sandwich_tol: 1e-12, residual_tol: 1e-8 }
    }
}

/// Solved correction for order m, before feasibility checks.
fn solve_correction(rhs: &[f64], m: usize) -> Result<Vec<f64>> {
    solve_moment_system(&rhs[..m])
}

fn correction_feasible(coeffs: &[f64], tail: &Adversary1D, cfg: &MomentMatchConfig) -> bool {
    let eps = tail.epsilon();
    let n = cfg.grid_points.max(3);
    (0..n).all(|i| {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let p = legendre_series(coeffs, x);
        let f = tail.density(x) + p;
        let clean = tail.clean_density(x);
        p.abs() <= cfg.slack * eps
            && f - clean <= cfg.sandwich_tol
            && (1.0 - eps) * clean - f <= cfg.sandwich_tol
    })
}

/// Adversary with clean mean delta whose normalised visible law matches the
/// first `m` moments of N(0, 1), via a Legendre correction on [-1, 1].
pub fn moment_matched_adversary(params: &ContaminationParams, m: usize, cfg: &MomentMatchConfig) -> Result<Adversary1D> {
    if m == 0 {
        return Err(domain("moment order m must be at least 1"));
    }
    let delta = params.delta;
    let tail = tail_matching_adversary(params, delta)?;
    let a = 1.0 - params.epsilon / 2.0;
    let (lo_c, hi_c) = (tail.pieces[1].lo, tail.pieces[1].hi);
    if lo_c > -1.0 || hi_c < 1.0 {
        return Err(Error::ConstructionInfeasible(format!(
            "correction window [-1, 1] leaves the central interval [{lo_c}, {hi_c}]"
        )));
    }
    // int x^i p must equal a * int_tails x^i (phi - g/a): only the tails differ from the target.
    let mut rhs = vec![0.0; m];
    for piece in [&tail.pieces[0], &tail.pieces[2]] {
        let target = shifted_interval_moments(piece.lo, piece.hi, 0.0, m);
        let visible = piece.raw_moments(m);
        for i in 1..=m {
            rhs[i - 1] += a * target[i] - visible[i];
        }
    }
    let coeffs = solve_correction(&rhs, m)?;
    if !correction_feasible(&coeffs, &tail, cfg) {
        let mut largest = 0;
        for mm in (1..m).rev() {
            let c = solve_correction(&rhs, mm)?;
            if correction_feasible(&c, &tail, cfg) {
                largest = mm;
                break;
            }
        }
        return Err(Error::MomentBudgetExceeded { requested: m, largest_feasible: largest });
    }
    let centre = &tail.pieces[1];
    let pieces = vec![
        tail.pieces[0].clone(),
        Piece::gaussian(lo_c, -1.0, centre.scale, centre.shift),
        Piece { lo: -1.0, hi: 1.0, kind: PieceKind::ScaledGaussianPlusLegendre, scale: centre.scale, shift: centre.shift, coeffs },
        Piece::gaussian(1.0, hi_c, centre.scale, centre.shift),
        tail.pieces[2].clone(),
    ];
    let adv = Adversary1D::new(delta, params.epsilon, pieces)?;
    // Independent re-check by adaptive quadrature.
    let mass = adv.integrate_against(|_| 1.0, QuadOptions::default())?;
    let target = normal::full_moments(m);
    for i in 1..=m {
        let mi = adv.integrate_against(|x| x.powi(i as i32), QuadOptions::default())? / mass;
        let r = (mi - target[i]).abs();
        if r > cfg.residual_tol {
            return Err(Error::Numeric { message: format!("moment {i} residual after solve"), achieved: r });
        }
    }
    Ok(adv)
}

/// Two adversaries with clean means -delta/2 and +delta/2 and identical
/// normalised visible laws up to reflection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingPair {
    pub q1: Adversary1D,
    pub q2: Adversary1D,
    pub t: f64,
    pub alpha: f64,
}

pub fn coupling_pair(params: &ContaminationParams) -> Result<CouplingPair> {
    let eps = params.epsilon;
    let delta = params.delta;
    let t = params.gamma;
    if delta > t {
        return Err(domain(format!("coupling needs delta^2 <= ln(1 + eps/(1-eps)); delta = {delta}, threshold/delta = {t}")));
    }
    let h = delta / 2.0;
    let q1 = Adversary1D::new(
        -h,
        eps,
        vec![
            Piece::gaussian(f64::NEG_INFINITY, -t, 1.0 - eps, -h),
            Piece::gaussian(-t, 0.0, 1.0, h),
            Piece::gaussian(0.0, f64::INFINITY, 1.0, -h),
        ],
    )?;
    let q2 = Adversary1D::new(
        h,
        eps,
        vec![
            Piece::gaussian(f64::NEG_INFINITY, 0.0, 1.0, h),
            Piece::gaussian(0.0, t, 1.0, -h),
            Piece::gaussian(t, f64::INFINITY, 1.0 - eps, h),
        ],
    )?;
    let diff = (q1.total_mass() - q2.total_mass()).abs();
    if diff > 1e-9 {
        return Err(Error::Numeric { message: "coupling masses differ".into(), achieved: diff });
    }
    let alpha = q1.total_mass();
    Ok(CouplingPair { q1, q2, t, alpha })
}

/// Plants a 1D adversary along unit direction v: x = y v + (I - v v^T) z + offset.
#[derive(Clone, Debug)]
pub struct HiddenDirectionSampler {
    adv: Adversary1D,
    direction: Vec<f64>,
    offset: Vec<f64>,
}

impl HiddenDirectionSampler {
    pub fn new(adv: Adversary1D, direction: Vec<f64>) -> Result<Self> {
        if direction.is_empty() {
            return Err(domain("direction must have at least one coordinate"));
        }
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(domain(format!("direction must be a unit vector, norm {norm}")));
        }
        let d = direction.len();
        Ok(Self { adv, direction, offset: vec![0.0; d] })
    }

    /// Adds a mean component orthogonal to the direction.
    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.direction.len() {
            return Err(Error::DimensionMismatch { expected: self.direction.len(), got: offset.len() });
        }
        let along: f64 = offset.iter().zip(&self.direction).map(|(a, b)| a * b).sum();
        if along.abs() > 1e-9 * (1.0 + offset.iter().map(|x| x.abs()).sum::<f64>()) {
            return Err(domain("offset must be orthogonal to the direction"));
        }
        self.offset = offset;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn adversary(&self) -> &Adversary1D {
        &self.adv
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Clean mean base_mean * v + offset.
    pub fn true_mean(&self) -> Vec<f64> {
        self.direction.iter().zip(&self.offset).map(|(v, o)| self.adv.base_mean * v + o).collect()
    }

    /// Writes one observation into `out`; returns false when it is missing.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> bool {
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        let y = self.adv.draw(rng);
        let Some(y) = y else { return false };
        let proj: f64 = out.iter().zip(&self.direction).map(|(a, b)| a * b).sum();
        for ((o, v), off) in out.iter_mut().zip(&self.direction).zip(&self.offset) {
            *o += (y - proj) * v + off;
        }
        true
    }

    pub fn sample_with_rng<R: Rng + ?Sized>(&self, n: usize, seed: u64, rng: &mut R) -> Dataset {
        let d = self.dim();
        let mut data = Dataset::with_capacity(d, seed, n).expect("dimension checked at construction");
        let mut buf = vec![0.0; d];
        for _ in 0..n {
            if self.draw_into(rng, &mut buf) {
                data.push_value(&buf).expect("finite by construction");
            } else {
                data.push_missing();
            }
        }
        data
    }

    /// Reproducible from `seed` alone.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.sample_with_rng(n, seed, &mut rng)
    }
}

/// `n` censored 1D draws; returns the visible values and the missing count.
pub fn sample_1d<R: Rng + ?Sized>(adv: &Adversary1D, n: usize, rng: &mut R) -> (Vec<f64>, usize) {
    let mut vis = Vec::with_capacity(n);
    for _ in 0..n {
        if let Some(x) = adv.draw(rng) {
            vis.push(x);
        }
    }
    let missing = n - vis.len();
    (vis, missing)
}
