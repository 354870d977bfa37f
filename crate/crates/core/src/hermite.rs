//! Hermite polynomials and order-k Hermite tensors.
//!
//! Entry (i_1..i_k) of H_k(x) is (1/sqrt(k!)) prod_j He_{c_j}(x_j), where c_j counts
//! occurrences of coordinate j among the indices: in the sum over partitions into
//! singletons and pairs, a pair with distinct indices contributes zero, so the sum
//! factorises per coordinate. [`hermite_tensor_by_partitions`] evaluates the
//! partition sum directly and serves as the reference.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{pairwise_sum, Real};

/// Probabilists' He_0..=He_k at x.
pub fn hermite_he_all<T: Real>(k: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(T::one());
    if k >= 1 {
        out.push(x);
    }
    for n in 1..k {
        let nf = T::from_usize(n).unwrap();
        let next = x * out[n] - nf * out[n - 1];
        out.push(next);
    }
    out
}

/// Probabilists' He_k(x).
pub fn hermite_he<T: Real>(k: usize, x: T) -> T {
    hermite_he_all(k, x)[k]
}

/// sqrt(k!) as a float.
pub fn sqrt_factorial<T: Real>(k: usize) -> T {
    let mut acc = 0.0f64;
    for i in 2..=k {
        acc += (i as f64).ln();
    }
    T::lit((0.5 * acc).exp())
}

/// Normalised h_k = He_k / sqrt(k!), orthonormal under N(0, 1).
pub fn hermite_normalized<T: Real>(k: usize, x: T) -> T {
    hermite_he(k, x) / sqrt_factorial::<T>(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteConfig {
    pub max_order: usize,
    /// Upper bound on d^k.
    pub max_entries: usize,
    /// Rows per deterministic reduction leaf.
    pub chunk_rows: usize,
}

impl Default for HermiteConfig {
    fn default() -> Self {
        Self { max_order: 16, max_entries: 10_000_000, chunk_rows: 4096 }
    }
}

impl HermiteConfig {
    fn check(&self, dim: usize, k: usize) -> Result<usize> {
        if dim == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        if k > self.max_order {
            return Err(Error::Capability(format!("tensor order {k} exceeds cap {}", self.max_order)));
        }
        let entries = (dim as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if entries > self.max_entries as u128 {
            return Err(Error::Capability(format!(
                "d^k = {dim}^{k} exceeds the entry cap {}",
                self.max_entries
            )));
        }
        Ok(entries as usize)
    }
}

/// Dense order-k tensor over R^d, row-major with the first index slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteTensor<T> {
    order: usize,
    dim: usize,
    data: Vec<T>,
}

/// Order-k tensor reshaped to d x d^{k-1}; shares the row-major layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FlattenedTensor<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> HermiteTensor<T> {
    pub fn from_vec(order: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        let expected = dim.checked_pow(order as u32).ok_or_else(|| Error::Capability("tensor too large".into()))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: data.len() });
        }
        Ok(Self { order, dim, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        assert_eq!(idx.len(), self.order, "index length must equal tensor order");
        self.data[self.offset(idx)]
    }

    pub fn frobenius_norm(&self) -> T {
        let sq: Vec<T> = self.data.iter().map(|&v| v * v).collect();
        pairwise_sum(&sq).sqrt()
    }

    /// Max over entries of |A_I - A_{sigma(I)}| for adjacent transpositions sigma.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        let mut idx = vec![0usize; self.order];
        for (flat, &v) in self.data.iter().enumerate() {
            unflatten(flat, self.dim, &mut idx);
            for a in 1..self.order {
                idx.swap(a - 1, a);
                worst = worst.max((v - self.data[self.offset(&idx)]).abs());
                idx.swap(a - 1, a);
            }
        }
        worst
    }

    /// <v^{(x)k}, A>.
    pub fn contract(&self, v: &[T]) -> Result<T> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        // Contract the last index once per order; d = 1 keeps a single entry throughout.
        let mut cur = self.data.clone();
        for _ in 0..self.order {
            cur = cur
                .chunks_exact(self.dim)
                .map(|c| c.iter().zip(v).map(|(&a, &b)| a * b).sum())
                .collect();
        }
        Ok(cur.first().copied().unwrap_or_else(T::zero))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.data.len(), got: other.data.len() });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self { order: self.order, dim: self.dim, data })
    }

    pub fn flatten(&self) -> Result<FlattenedTensor<T>> {
        if self.order == 0 {
            return Err(Error::NotFlattenable);
        }
        Ok(FlattenedTensor { rows: self.dim, cols: self.data.len() / self.dim, data: self.data.clone() })
    }
}

impl<T: Real> FlattenedTensor<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// M M^T, row-major rows x rows.
    pub fn gram(&self) -> Vec<T> {
        let n = self.rows;
        let mut g = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let prods: Vec<T> = self.row(i).iter().zip(self.row(j)).map(|(&a, &b)| a * b).collect();
                let s = pairwise_sum(&prods);
                g[i * n + j] = s;
                g[j * n + i] = s;
            }
        }
        g
    }
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Non-decreasing index tuples of length k over 0..dim, as (coordinate, multiplicity) lists.
fn multisets(dim: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(dim: usize, start: usize, left: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..dim {
            for c in (1..=left).rev() {
                cur.push((j, c));
                rec(dim, j + 1, left - c, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(dim, 0, k, &mut Vec::new(), &mut out);
    out
}

/// Maps every full index tuple to its multiset id.
fn expand_multisets<T: Real>(dim: usize, k: usize, sets: &[Vec<(usize, usize)>], values: &[T], scale: T) -> Vec<T> {
    let lookup: HashMap<Vec<usize>, usize> = sets
        .iter()
        .enumerate()
        .map(|(id, s)| {
            let mut counts = vec![0usize; dim];
            for &(j, c) in s {
                counts[j] = c;
            }
            (counts, id)
        })
        .collect();
    let total = dim.pow(k as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; k];
    let mut counts = vec![0usize; dim];
    for flat in 0..total {
        unflatten(flat, dim, &mut idx);
        counts.iter_mut().for_each(|c| *c = 0);
        for &i in &idx {
            counts[i] += 1;
        }
        out.push(values[lookup[&counts]] * scale);
    }
    out
}

/// H_k(x) for a single point.
pub fn hermite_tensor<T: Real>(x: &[T], k: usize, cfg: &HermiteConfig) -> Result<HermiteTensor<T>> {
    cfg.check(x.len(), k)?;
    let table: Vec<Vec<T>> = x.iter().map(|&xi| hermite_he_all(k, xi)).collect();
    let sets = multisets(x.len(), k);
    let values: Vec<T> = sets.iter().map(|s| s.iter().map(|&(j, c)| table[j][c]).fold(T::one(), |a, b| a * b)).collect();
    let data = expand_multisets(x.len(), k, &sets, &values, T::one() / sqrt_factorial::<T>(k));
    HermiteTensor::from_vec(k, x.len(), data)
}

/// A partition of {0..k-1} into singletons and pairs.
#[derive(Clone, Debug)]
struct Partition {
    singles: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

fn partitions(k: usize) -> Arc<Vec<Partition>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Partition>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&k) {
        return p.clone();
    }
    fn rec(rest: &[usize], cur: &mut Partition, out: &mut Vec<Partition>) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(cur.clone());
            return;
        };
        cur.singles.push(first);
        rec(tail, cur, out);
        cur.singles.pop();
        for (pos, &other) in tail.iter().enumerate() {
            let mut remaining = tail.to_vec();
            remaining.remove(pos);
            cur.pairs.push((first, other));
            rec(&remaining, cur, out);
            cur.pairs.pop();
        }
    }
    let elems: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    rec(&elems, &mut Partition { singles: Vec::new(), pairs: Vec::new() }, &mut out);
    let arc = Arc::new(out);
    cache.lock().unwrap().insert(k, arc.clone());
    arc
}

/// Number of partitions of a k-set into singletons and pairs.
pub fn partition_count(k: usize) -> usize {
    partitions(k).len()
}

/// Reference H_k(x) by explicit summation over partitions; k <= 10.
pub fn hermite_tensor_by_partitions<T: Real>(x: &[T], k: usize) -> Result<HermiteTensor<T>> {
    if k > 10 {
        return Err(Error::Capability(format!("partition enumeration limited to k <= 10, got {k}")));
    }
    let d = x.len();
    let parts = partitions(k);
    let total = d.checked_pow(k as u32).ok_or_else(|| Error::Capability("tensor too large".into()))?;
    let scale = T::one() / sqrt_factorial::<T>(k);
    let mut idx = vec![0usize; k];
    let mut data = Vec::with_capacity(total);
    for flat in 0..total {
        unflatten(flat, d, &mut idx);
        let mut acc = T::zero();
        for p in parts.iter() {
            if p.pairs.iter().any(|&(a, b)| idx[a] != idx[b]) {
                continue;
            }
            let mut term = if p.pairs.len() % 2 == 0 { T::one() } else { -T::one() };
            for &s in &p.singles {
                term *= x[idx[s]];
            }
            acc += term;
        }
        data.push(acc * scale);
    }
    HermiteTensor::from_vec(k, d, data)
}

/// Average of H_k over row-major `rows`; deterministic for any thread count.
pub fn empirical_hermite_tensor<T: Real>(rows: &[T], dim: usize, k: usize, cfg: &HermiteConfig) -> Result<HermiteTensor<T>> {
    cfg.check(dim, k)?;
    if rows.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, got: rows.len() % dim });
    }
    let n = rows.len() / dim;
    if n == 0 {
        return Err(Error::EmptyData("no samples for the empirical tensor".into()));
    }
    let sets = multisets(dim, k);
    let chunk = cfg.chunk_rows.max(1) * dim;
    let partials: Vec<Vec<T>> = rows
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![T::zero(); sets.len()];
            for x in block.chunks_exact(dim) {
                let table: Vec<Vec<T>> = x.iter().map(|&xi| hermite_he_all(k, xi)).collect();
                for (a, s) in acc.iter_mut().zip(&sets) {
                    *a += s.iter().map(|&(j, c)| table[j][c]).fold(T::one(), |p, q| p * q);
                }
            }
            acc
        })
        .collect();
    let sums = tree_reduce(partials);
    let scale = T::one() / (sqrt_factorial::<T>(k) * T::from_usize(n).unwrap());
    let data = expand_multisets(dim, k, &sets, &sums, scale);
    HermiteTensor::from_vec(k, dim, data)
}

fn tree_reduce<T: Real>(mut parts: Vec<Vec<T>>) -> Vec<T> {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.iter().zip(b).map(|(&x, &y)| x + y).collect(),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    parts.pop().unwrap_or_default()
}

/// mu^{(x)k} / sqrt(k!): the expected Hermite tensor under N(mu, I).
pub fn gaussian_hermite_mean<T: Real>(mu: &[T], k: usize, cfg: &HermiteConfig) -> Result<HermiteTensor<T>> {
    cfg.check(mu.len(), k)?;
    let d = mu.len();
    let total = d.pow(k as u32);
    let scale = T::one() / sqrt_factorial::<T>(k);
    let mut idx = vec![0usize; k];
    let data = (0..total)
        .map(|flat| {
            unflatten(flat, d, &mut idx);
            idx.iter().fold(scale, |a, &i| a * mu[i])
        })
        .collect();
    HermiteTensor::from_vec(k, d, data)
}
