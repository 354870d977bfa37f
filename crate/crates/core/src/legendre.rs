//! Legendre basis on [-1, 1] and the triangular moment system it induces.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exact or floating field used for the Gram system.
pub trait Field: Clone + PartialEq + Debug + Num + Neg<Output = Self> {
    fn from_int(v: i64) -> Self;
}

impl Field for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
}

impl Field for f32 {
    fn from_int(v: i64) -> Self {
        v as f32
    }
}

impl Field for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

impl Field for Rational64 {
    fn from_int(v: i64) -> Self {
        Rational64::from_integer(v)
    }
}

/// P_k(x) by the three-term recurrence.
pub fn legendre_eval<T: Real>(k: usize, x: T) -> T {
    let mut p0 = T::one();
    if k == 0 {
        return p0;
    }
    let mut p1 = x;
    for n in 1..k {
        let nf = T::from_usize(n).unwrap();
        let p2 = ((nf + nf + T::one()) * x * p1 - nf * p0) / (nf + T::one());
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// sum_{k=1}^{m} a[k-1] P_k(x).
pub fn legendre_series<T: Real>(a: &[T], x: T) -> T {
    let mut p0 = T::one();
    let mut p1 = x;
    let mut acc = T::zero();
    for (i, &c) in a.iter().enumerate() {
        let k = i + 1;
        if k > 1 {
            let nf = T::from_usize(k - 1).unwrap();
            let p2 = ((nf + nf + T::one()) * x * p1 - nf * p0) / (nf + T::one());
            p0 = p1;
            p1 = p2;
        }
        acc += c * p1;
    }
    acc
}

/// Monomial coefficients of P_k (index j multiplies x^j).
pub fn monomial_coeffs<F: Field>(k: usize) -> Vec<F> {
    let mut prev = vec![F::one()];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![F::zero(), F::one()];
    for n in 1..k {
        let mut next = vec![F::zero(); n + 2];
        let a = F::from_int(2 * n as i64 + 1);
        let b = F::from_int(n as i64);
        let d = F::from_int(n as i64 + 1);
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + a.clone() * c.clone();
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] = next[j].clone() - b.clone() * c.clone();
        }
        for c in next.iter_mut() {
            *c = c.clone() / d.clone();
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Integral of x^p over [-1, 1].
pub fn monomial_integral<F: Field>(p: usize) -> F {
    if p % 2 == 1 {
        F::zero()
    } else {
        F::from_int(2) / F::from_int(p as i64 + 1)
    }
}

/// G[i-1][k-1] = int_{-1}^{1} x^i P_k(x) dx for i, k in 1..=m; lower triangular.
pub fn gram_matrix<F: Field>(m: usize) -> Vec<Vec<F>> {
    let polys: Vec<Vec<F>> = (1..=m).map(monomial_coeffs::<F>).collect();
    (1..=m)
        .map(|i| {
            polys
                .iter()
                .map(|coeffs| {
                    coeffs
                        .iter()
                        .enumerate()
                        .fold(F::zero(), |acc, (j, c)| acc + c.clone() * monomial_integral::<F>(i + j))
                })
                .collect()
        })
        .collect()
}

/// Forward substitution for a lower-triangular system.
pub fn solve_lower_triangular<F: Field>(g: &[Vec<F>], rhs: &[F]) -> Result<Vec<F>> {
    let m = rhs.len();
    if g.len() != m || g.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: g.len() });
    }
    let mut x: Vec<F> = Vec::with_capacity(m);
    for i in 0..m {
        if g[i][i] == F::zero() {
            return Err(Error::Numeric { message: format!("zero pivot in row {i}"), achieved: 0.0 });
        }
        let mut s = rhs[i].clone();
        for (k, xk) in x.iter().enumerate() {
            s = s - g[i][k].clone() * xk.clone();
        }
        x.push(s / g[i][i].clone());
    }
    Ok(x)
}

/// Solves G a = rhs exactly in rationals (each f64 is an exact rational) and rounds once.
pub fn solve_moment_system(rhs: &[f64]) -> Result<Vec<f64>> {
    let g = gram_matrix::<BigRational>(rhs.len());
    let r: Vec<BigRational> = rhs
        .iter()
        .map(|&v| BigRational::from_float(v).ok_or_else(|| crate::error::domain("non-finite right-hand side")))
        .collect::<Result<_>>()?;
    let a = solve_lower_triangular(&g, &r)?;
    Ok(a.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn monomial_coefficients_are_exact() {
        // P_2 = (3x^2 - 1)/2, P_3 = (5x^3 - 3x)/2
        assert_eq!(monomial_coeffs::<BigRational>(2), vec![q(-1, 2), q(0, 1), q(3, 2)]);
        assert_eq!(monomial_coeffs::<BigRational>(3), vec![q(0, 1), q(-3, 2), q(0, 1), q(5, 2)]);
        assert_eq!(monomial_coeffs::<Rational64>(4)[4], Rational64::new(35, 8));
    }

    #[test]
    fn gram_matrix_is_lower_triangular_with_parity_zeros() {
        let g = gram_matrix::<BigRational>(6);
        for i in 0..6 {
            for k in 0..6 {
                if k > i || (i + k) % 2 == 1 {
                    assert_eq!(g[i][k], q(0, 1), "G[{i}][{k}]");
                }
            }
        }
        // int x P_1 = 2/3, int x^2 P_2 = 4/15
        assert_eq!(g[0][0], q(2, 3));
        assert_eq!(g[1][1], q(4, 15));
        assert_eq!(g[2][0], q(2, 5));
    }

    #[test]
    fn float_and_rational_gram_agree() {
        let gr = gram_matrix::<BigRational>(8);
        let gf = gram_matrix::<f64>(8);
        for i in 0..8 {
            for k in 0..8 {
                assert_relative_eq!(gr[i][k].to_f64().unwrap(), gf[i][k], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn evaluation_matches_monomial_form() {
        for k in 0..10 {
            let c = monomial_coeffs::<f64>(k);
            for &x in &[-1.0, -0.3, 0.0, 0.45, 1.0] {
                let direct: f64 = c.iter().enumerate().map(|(j, c)| c * f64::powi(x, j as i32)).sum();
                assert_relative_eq!(legendre_eval(k, x), direct, epsilon = 1e-12);
            }
        }
        assert_eq!(legendre_eval(7, 1.0f64), 1.0);
        assert_eq!(legendre_eval(7, -1.0f64), -1.0);
    }

    #[test]
    fn series_matches_termwise_sum() {
        let a = [0.3, -0.2, 0.05, 0.01];
        for &x in &[-0.9f64, 0.1, 0.8] {
            let direct: f64 = a.iter().enumerate().map(|(i, c)| c * legendre_eval(i + 1, x)).sum();
            assert_relative_eq!(legendre_series(&a, x), direct, epsilon = 1e-15);
        }
    }

    #[test]
    fn system_solution_reproduces_moments() {
        let rhs = [0.01, -0.02, 0.003, 0.004, -0.001];
        let a = solve_moment_system(&rhs).unwrap();
        let g = gram_matrix::<f64>(5);
        for i in 0..5 {
            let v: f64 = (0..5).map(|k| g[i][k] * a[k]).sum();
            assert_relative_eq!(v, rhs[i], epsilon = 1e-16);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let g = vec![vec![0.0f64]];
        assert!(solve_lower_triangular(&g, &[1.0]).is_err());
    }
}
