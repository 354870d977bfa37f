use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use realcon::hermite::{
    empirical_hermite_tensor, hermite_normalized, hermite_tensor, hermite_tensor_by_partitions, HermiteConfig, HermiteTensor,
};

fn vec_strategy(d: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, d)
}

fn point_and_direction() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(k, d)| (Just(k), vec_strategy(d, 4.0), vec_strategy(d, 1.0)))
}

fn permuted_entry(t: &HermiteTensor<f64>, idx: &[usize], perm: &[usize]) -> f64 {
    let p: Vec<usize> = perm.iter().map(|&i| idx[i]).collect();
    t.get(&p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn contraction_is_the_one_dimensional_hermite_value((k, x, v) in point_and_direction()) {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let v: Vec<f64> = v.iter().map(|a| a / n).collect();
        let h = hermite_tensor(&x, k, &HermiteConfig::default()).unwrap();
        let vx: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
        let want = hermite_normalized(k, vx);
        prop_assert!((h.contract(&v).unwrap() - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn factorised_entries_match_partition_sums((k, x, _v) in point_and_direction()) {
        let a = hermite_tensor(&x, k, &HermiteConfig::default()).unwrap();
        let b = hermite_tensor_by_partitions(&x, k).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn tensors_are_symmetric_under_random_permutations(
        (k, x, _v) in point_and_direction(),
        seed in any::<u64>(),
    ) {
        let cfg = HermiteConfig::default();
        let d = x.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<f64> = (0..50 * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for t in [hermite_tensor(&x, k, &cfg).unwrap(), empirical_hermite_tensor(&rows, d, k, &cfg).unwrap()] {
            for _ in 0..20 {
                let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..d)).collect();
                let mut perm: Vec<usize> = (0..k).collect();
                for i in (1..k).rev() {
                    perm.swap(i, rng.random_range(0..=i));
                }
                prop_assert!((t.get(&idx) - permuted_entry(&t, &idx, &perm)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn norm_stays_inside_the_polynomial_envelope(k in 1usize..=8, d in 1usize..=8, seed in any::<u64>()) {
        prop_assume!((d as f64).powi(k as i32) <= 300_000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale: f64 = rng.random_range(0.05..4.0);
        let x: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let h = hermite_tensor(&x, k, &HermiteConfig::default()).unwrap();
        let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let envelope = (d as f64).powf(k as f64 / 2.0) * (1.0 + xn.powi(k as i32)) * 2f64.powi(3 * k as i32);
        prop_assert!(h.frobenius_norm() <= envelope);
    }
}

#[test]
fn envelope_holds_at_the_largest_order_and_dimension() {
    let cfg = HermiteConfig { max_entries: 20_000_000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for scale in [0.1, 1.0, 3.0] {
        let x: Vec<f64> = (0..8).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let h = hermite_tensor(&x, 8, &cfg).unwrap();
        let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(h.frobenius_norm() <= 8f64.powi(4) * (1.0 + xn.powi(8)) * 2f64.powi(24));
    }
}

/// Random symmetric tensor sum_r c_r u_r^{(x)t} with unit vectors u_r, as a dense array.
fn rank_one_sum(d: usize, t: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let terms: Vec<(f64, Vec<f64>)> = (0..3)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            (rng.sample::<f64, _>(StandardNormal), g.iter().map(|a| a / n).collect())
        })
        .collect();
    let total = d.pow(t as u32);
    let mut a = vec![0.0; total];
    for (c, u) in &terms {
        for (flat, slot) in a.iter_mut().enumerate() {
            let mut rem = flat;
            let mut prod = *c;
            for _ in 0..t {
                prod *= u[rem % d];
                rem /= d;
            }
            *slot += prod;
        }
    }
    let norm2 = a.iter().map(|x| x * x).sum();
    (a, norm2)
}

#[test]
fn gaussian_shift_inflates_second_moment_by_at_most_exp_degree_norm() {
    let cfg = HermiteConfig::default();
    let d = 3;
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for degree in 1..=4usize {
        for _ in 0..3 {
            // p(x) = sum_t <A_t, H_t(x)>; E_N(0,I)[p^2] = sum_t |A_t|^2 for symmetric A_t.
            let mut parts: Vec<(usize, Vec<f64>)> = Vec::new();
            let mut total = 0.0;
            for t in 1..=degree {
                let (a, n2) = rank_one_sum(d, t, &mut rng);
                total += n2;
                parts.push((t, a));
            }
            let scale = 1.0 / total.sqrt();
            let mu: Vec<f64> = (0..d).map(|_| 0.4 * rng.sample::<f64, _>(StandardNormal)).collect();
            let mu2: f64 = mu.iter().map(|a| a * a).sum();
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    let x: Vec<f64> = mu.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();
                    let p: f64 = parts
                        .iter()
                        .map(|(t, a)| {
                            let h = hermite_tensor(&x, *t, &cfg).unwrap();
                            h.as_slice().iter().zip(a).map(|(u, v)| u * v).sum::<f64>()
                        })
                        .sum::<f64>()
                        * scale;
                    p * p
                })
                .collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            let bound = (degree as f64 * mu2).exp();
            assert!(mean <= bound + 4.0 * se, "degree {degree}: {mean} > {bound} (se {se})");
        }
    }
}
