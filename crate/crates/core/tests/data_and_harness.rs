use std::collections::BTreeMap;
use std::io::Cursor;

use proptest::prelude::*;
use realcon::harness::{run_bench, summarize, write_summary_csv, write_trials_csv, AdversarySpec, EstimatorKind, ExperimentConfig};
use realcon::io::{read_samples_csv, write_samples_csv};
use realcon::{derive_params, Adversary1D, Dataset, DerivationConstants, HiddenDirectionSampler, ObservedSample};

fn sample_strategy() -> impl Strategy<Value = (usize, Vec<Option<Vec<f64>>>)> {
    (1usize..5).prop_flat_map(|d| {
        let row = prop::option::weighted(0.7, prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, d));
        (Just(d), prop::collection::vec(row, 0..40))
    })
}

proptest! {
    #[test]
    fn derived_parameters_are_pure_and_ordered(eps in 0.001f64..0.999, delta in 0.01f64..5.0) {
        let a = derive_params(eps, delta, DerivationConstants::default()).unwrap();
        let b = derive_params(eps, delta, DerivationConstants::default()).unwrap();
        prop_assert_eq!(a.b.to_bits(), b.b.to_bits());
        prop_assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
        prop_assert_eq!(a.eta.to_bits(), b.eta.to_bits());
        prop_assert_eq!(a.k, b.k);
        prop_assert!(a.b < a.gamma);
        prop_assert_eq!(a.k % 2, 0);
    }

    #[test]
    fn sample_csv_round_trips_losslessly((d, rows) in sample_strategy(), seed in any::<u64>()) {
        let samples: Vec<ObservedSample> = rows
            .iter()
            .map(|r| match r {
                Some(v) => ObservedSample::Value(v.clone()),
                None => ObservedSample::Missing,
            })
            .collect();
        let data = Dataset::from_samples(d, seed, samples).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&data, &mut buf).unwrap();
        let back = read_samples_csv(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(back.dim(), d);
        prop_assert_eq!(back.seed(), seed);
        prop_assert_eq!(back.len(), data.len());
        for (a, b) in data.iter().zip(back.iter()) {
            match (a, b) {
                (None, None) => {}
                (Some(x), Some(y)) => prop_assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())),
                _ => prop_assert!(false, "missing mask changed"),
            }
        }
        let mut again = Vec::new();
        write_samples_csv(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}

#[test]
fn simulated_samples_reserialize_byte_identically() {
    let p = derive_params(0.6, 0.4, DerivationConstants::default()).unwrap();
    let adv = realcon::adversary::tail_matching_adversary(&p, 0.3).unwrap();
    let s = HiddenDirectionSampler::new(adv, vec![0.0, 0.6, 0.8]).unwrap();
    let data = s.sample(2000, 17);
    assert!(data.missing_count() > 0);
    let mut first = Vec::new();
    write_samples_csv(&data, &mut first).unwrap();
    let mut second = Vec::new();
    write_samples_csv(&read_samples_csv(Cursor::new(&first)).unwrap(), &mut second).unwrap();
    assert_eq!(first, second);
}

fn small_config(estimator: EstimatorKind, d: usize) -> ExperimentConfig {
    let mut stages = BTreeMap::new();
    stages.insert("main".to_string(), 4000u64);
    ExperimentConfig {
        epsilon: 0.5,
        delta: 0.5,
        d,
        n_per_stage: stages,
        trials: 12,
        master_seed: 77,
        adversary: AdversarySpec::Tail,
        estimator,
        constants: BTreeMap::new(),
        record_wall_time: false,
    }
}

#[test]
fn bench_output_is_byte_identical_across_runs() {
    let cfg = small_config(EstimatorKind::Median, 3);
    let render = || {
        let (records, summary) = run_bench(&cfg, Some(1)).unwrap();
        let mut t = Vec::new();
        write_trials_csv(&cfg, &records, &mut t).unwrap();
        let mut s = Vec::new();
        write_summary_csv(&cfg, &summary, &mut s).unwrap();
        (t, s)
    };
    assert_eq!(render(), render());
}

#[test]
fn summary_recomputes_from_records() {
    let cfg = small_config(EstimatorKind::Median, 2);
    let (records, summary) = run_bench(&cfg, Some(1)).unwrap();
    assert_eq!(summarize(&records, cfg.delta), summary);
    let ok = records.iter().filter(|r| r.error_l2 <= cfg.delta).count();
    assert_eq!(summary.successes, ok);
    assert_eq!(summary.trials, records.len());
}

#[test]
fn identity_adversary_never_censors() {
    let s = HiddenDirectionSampler::new(Adversary1D::identity(1.0).unwrap(), vec![1.0, 0.0]).unwrap();
    let data = s.sample(5000, 3);
    assert_eq!(data.missing_count(), 0);
}
