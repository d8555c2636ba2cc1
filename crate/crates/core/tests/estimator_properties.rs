mod common;

use common::instance;
use mcal_core::distances::{dce, dimc};
use mcal_core::estimators::{dce_interval, derive_seed, dimc_interval, sample, smce_empirical};
use mcal_core::instances::gen_three_point;
use mcal_core::io::{instance_from_json, instance_to_json};
use mcal_core::rational::{int, q};
use mcal_core::{Rational, Subgroup};
use num_traits::Signed;
use proptest::prelude::*;

fn labeled() -> impl Strategy<Value = Vec<(Rational, bool)>> {
    proptest::collection::vec((0i64..=10, any::<bool>()), 1..40)
        .prop_map(|v| v.into_iter().map(|(a, y)| (q(a, 10), y)).collect())
}

/// Per-value residual sums `sum (y - v)` in increasing value order.
fn residuals(samples: &[(Rational, bool)]) -> Vec<Rational> {
    let mut vals: Vec<Rational> = samples.iter().map(|s| s.0.clone()).collect();
    vals.sort();
    vals.dedup();
    vals.iter()
        .map(|v| samples.iter().filter(|s| &s.0 == v).map(|s| int(s.1 as i64) - v).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn smce_in_unit_interval_and_bracketed(samples in labeled()) {
        let s = smce_empirical(&samples).unwrap();
        let m = int(samples.len() as i64);
        let r = residuals(&samples);
        let constant: Rational = r.iter().sum::<Rational>().abs() / &m;
        let free: Rational = r.iter().map(|c| c.abs()).sum::<Rational>() / &m;
        prop_assert!(!s.is_negative() && s <= int(1));
        prop_assert!(constant <= s && s <= free, "{} <= {} <= {}", constant, s, free);
    }

    #[test]
    fn smce_ignores_duplication_and_order(samples in labeled()) {
        let s = smce_empirical(&samples).unwrap();
        let mut doubled = samples.clone();
        doubled.extend(samples.iter().cloned());
        prop_assert_eq!(&smce_empirical(&doubled).unwrap(), &s);
        let mut rev = samples.clone();
        rev.reverse();
        prop_assert_eq!(smce_empirical(&rev).unwrap(), s);
    }

    #[test]
    fn json_round_trip(inst in instance(5, 3)) {
        let back = instance_from_json(&instance_to_json(&inst, false).unwrap()).unwrap();
        prop_assert_eq!(&back, &inst);
        let pretty = instance_from_json(&instance_to_json(&inst, true).unwrap()).unwrap();
        prop_assert_eq!(pretty, inst);
    }

    #[test]
    fn sampling_is_seeded(inst in instance(5, 2), seed in any::<u64>()) {
        let a = sample(&inst, 64, seed);
        prop_assert_eq!(&a, &sample(&inst, 64, seed));
        prop_assert!(a.iter().all(|&(x, _)| x < inst.n()));
        prop_assert_ne!(derive_seed(seed, 0), derive_seed(seed, 1));
    }
}

#[test]
fn single_value_smce_is_the_bias() {
    let samples = vec![(q(1, 4), true), (q(1, 4), false), (q(1, 4), false), (q(1, 4), true)];
    assert_eq!(smce_empirical(&samples).unwrap(), q(1, 4));
}

#[test]
fn intervals_are_deterministic_and_ordered() {
    let inst = gen_three_point(&q(1, 10)).unwrap();
    let s = Subgroup::new(vec![1, 2]).unwrap();
    let a = dce_interval(&inst, &s, &q(1, 10), &q(1, 5), 9).unwrap();
    assert_eq!(a, dce_interval(&inst, &s, &q(1, 10), &q(1, 5), 9).unwrap());
    assert!(a.lower <= a.point && a.upper.ge_rational(&a.point));
    assert!(a.contains(&dce(&inst, &s).unwrap().value));

    let b = dimc_interval(&inst, &q(1, 10), &q(1, 5), 9).unwrap();
    assert_eq!(b, dimc_interval(&inst, &q(1, 10), &q(1, 5), 9).unwrap());
    assert!(b.contains(&dimc(&inst).unwrap().value));
    assert!(b.samples_used > 0 && !b.point.is_negative());
}
