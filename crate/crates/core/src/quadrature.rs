//! Adaptive Gauss-Kronrod (7/15) and Gauss-Hermite rules.

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd-index Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
}

fn kronrod<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut fv = [T::zero(); 15];
    fv[7] = f(c);
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        fv[i] = f(c - dx);
        fv[14 - i] = f(c + dx);
    }
    let mut k = fv[7] * T::lit(WGK[7]);
    let mut g = fv[7] * T::lit(WG[3]);
    for i in 0..7 {
        let s = fv[i] + fv[14 - i];
        k += s * T::lit(WGK[i]);
        if i % 2 == 1 {
            g += s * T::lit(WG[i / 2]);
        }
    }
    // QUADPACK error heuristic: raw |K - G| is optimistic near kinks.
    let mean = k * half;
    let mut asc = (fv[7] - mean).abs() * T::lit(WGK[7]);
    for i in 0..7 {
        asc += ((fv[i] - mean).abs() + (fv[14 - i] - mean).abs()) * T::lit(WGK[i]);
    }
    let hv = h.abs();
    let resasc = asc * hv;
    let mut err = ((k - g) * h).abs();
    if resasc > T::zero() && err > T::zero() {
        err = resasc * T::one().min((T::lit(200.0) * err / resasc).powf(T::lit(1.5)));
    }
    (k * h, err)
}

/// Integral of `f` over the finite interval [a, b] by globally adaptive G7-K15.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, opts: QuadOptions) -> Result<QuadResult<T>> {
    integrate_dyn(&f, a, b, opts)
}

fn integrate_dyn<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, opts: QuadOptions) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return integrate_line(f, a, b, opts);
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero() });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let (v, e) = kronrod(f, lo, hi);
    let mut pieces = vec![(lo, hi, v, e)];
    loop {
        let total: T = pieces.iter().map(|p| p.2).collect::<CompensatedSum<T>>().value();
        let err: T = pieces.iter().map(|p| p.3).sum();
        let tol = T::lit(opts.abs_tol).max(T::lit(opts.rel_tol) * total.abs());
        if err <= tol {
            return Ok(QuadResult { value: sign * total, error: err });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::Numeric {
                message: format!("adaptive quadrature did not converge in {} intervals", opts.max_intervals),
                achieved: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let (l, r, _, _) = pieces.swap_remove(idx);
        let m = (l + r) * T::lit(0.5);
        if m <= l || m >= r {
            return Err(Error::Numeric {
                message: "adaptive quadrature interval underflow".into(),
                achieved: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (v1, e1) = kronrod(f, l, m);
        let (v2, e2) = kronrod(f, m, r);
        pieces.push((l, m, v1, e1));
        pieces.push((m, r, v2, e2));
    }
}

/// Handles infinite endpoints with x = a + (1 - s)/s on s in (0, 1].
fn integrate_line<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, opts: QuadOptions) -> Result<QuadResult<T>> {
    if a.is_nan() || b.is_nan() {
        return Err(crate::error::domain("NaN integration limit"));
    }
    if a > b {
        let r = integrate_line(f, b, a, opts)?;
        return Ok(QuadResult { value: -r.value, error: r.error });
    }
    let one = T::one();
    if a == T::neg_infinity() && b == T::infinity() {
        let l = integrate_line(f, a, T::zero(), opts)?;
        let r = integrate_line(f, T::zero(), b, opts)?;
        return Ok(QuadResult { value: l.value + r.value, error: l.error + r.error });
    }
    if b == T::infinity() {
        integrate_dyn(&|s: T| f(a + (one - s) / s) / (s * s), T::zero(), one, opts)
    } else {
        integrate_dyn(&|s: T| f(b - (one - s) / s) / (s * s), T::zero(), one, opts)
    }
}

/// Sum of adaptive integrals over consecutive breakpoints (endpoints may be infinite).
pub fn integrate_piecewise<T: Real, F: Fn(T) -> T>(f: F, breaks: &[T], opts: QuadOptions) -> Result<QuadResult<T>> {
    let mut value = CompensatedSum::new();
    let mut error = T::zero();
    for w in breaks.windows(2) {
        let r = integrate(&f, w[0], w[1], opts)?;
        value.add(r.value);
        error += r.error;
    }
    Ok(QuadResult { value: value.value(), error })
}

/// Nodes and weights with sum_i w_i g(x_i) ~ E[g(Z)], Z ~ N(0, 1); exact for degree <= 2n - 1.
pub fn gauss_hermite_rule<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    if n == 0 || n > 200 {
        return Err(crate::error::domain(format!("Gauss-Hermite order {n} outside 1..=200")));
    }
    // Newton on orthonormal physicists' Hermite polynomials; roots symmetric.
    let pim4 = T::lit(0.751_125_544_464_942_5); // pi^{-1/4}
    let nf = T::from_usize(n).unwrap();
    let two = T::lit(2.0);
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let m = n.div_ceil(2);
    let mut z = T::zero();
    for i in 0..m {
        z = match i {
            0 => (two * nf + one::<T>()).sqrt() - T::lit(1.85575) * (two * nf + one::<T>()).powf(T::lit(-1.0 / 6.0)),
            1 => z - T::lit(1.14) * nf.powf(T::lit(0.426)) / z,
            2 => T::lit(1.86) * z - T::lit(0.86) * x[0],
            3 => T::lit(1.91) * z - T::lit(0.91) * x[1],
            _ => two * z - x[i - 2],
        };
        let mut pp = T::zero();
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = T::zero();
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = T::from_usize(j).unwrap();
                p1 = z * (two / (jf + one::<T>())).sqrt() * p2 - (jf / (jf + one::<T>())).sqrt() * p3;
            }
            pp = (two * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= T::epsilon() * T::lit(16.0) * z.abs().max(one()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric { message: format!("Gauss-Hermite root {i} of {n} did not converge"), achieved: f64::NAN });
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = two / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Physicists' rule integrates against exp(-y^2); x = sqrt(2) y, weights / sqrt(pi).
    let sqrt2 = two.sqrt();
    let inv_sqrt_pi = T::lit(0.564_189_583_547_756_3);
    let mut nodes: Vec<T> = x.iter().map(|&v| v * sqrt2).collect();
    let mut weights: Vec<T> = w.iter().map(|&v| v * inv_sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    Ok((nodes, weights))
}

fn one<T: Real>() -> T {
    T::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let r = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-13);
        let r = integrate(|x: f64| x.abs(), -1.0, 2.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x: f64| x * x, 1.0, 0.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, -1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn infinite_limits_integrate_gaussian_tails() {
        let r = integrate(crate::normal::pdf, f64::NEG_INFINITY, f64::INFINITY, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
        let r = integrate(crate::normal::pdf, 2.0, f64::INFINITY, QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, crate::normal::sf(2.0), max_relative = 1e-10);
    }

    #[test]
    fn single_precision_quadrature_runs() {
        let r = integrate(|x: f32| x * x, 0.0f32, 3.0, QuadOptions { abs_tol: 1e-5, rel_tol: 1e-5, max_intervals: 100 }).unwrap();
        assert!((r.value - 9.0).abs() < 1e-4);
    }

    #[test]
    fn gauss_hermite_reproduces_gaussian_moments() {
        let (x, w) = gauss_hermite_rule::<f64>(20).unwrap();
        let wsum: f64 = w.iter().sum();
        assert_relative_eq!(wsum, 1.0, epsilon = 1e-13);
        let m = crate::normal::full_moments(12);
        for k in 0..=12 {
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert_relative_eq!(v, m[k], max_relative = 1e-11, epsilon = 1e-12);
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gauss_hermite_rejects_bad_order() {
        assert!(gauss_hermite_rule::<f64>(0).is_err());
    }
}
