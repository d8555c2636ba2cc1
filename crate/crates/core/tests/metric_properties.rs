mod common;

use common::instance;
use mcal_core::distances::{dce, dimc, dmc, generated_partition, intersection_closure, wdmc};
use mcal_core::enumerate::{calibrated_set, is_calibrated, is_multicalibrated, multicalibrated_set};
use mcal_core::rational::q;
use mcal_core::{conditional_l1, group_mass, l1_distance, Instance, PredictorVec, Rational, Subgroup};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn predictor(n: usize) -> impl Strategy<Value = PredictorVec> {
    proptest::collection::vec(0i64..=20, n).prop_map(|v| PredictorVec::new(v.into_iter().map(|x| q(x, 20)).collect()).unwrap())
}

fn with_second(max_n: usize) -> impl Strategy<Value = (Instance, PredictorVec)> {
    instance(max_n, 3).prop_flat_map(|inst| {
        let n = inst.n();
        (Just(inst), predictor(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_is_a_metric((inst, g) in with_second(5), h in predictor(5)) {
        let m = inst.marginal();
        let f = inst.audited();
        let h = PredictorVec::new(h.values()[..inst.n()].to_vec()).unwrap();
        let fg = l1_distance(f, &g, m).unwrap();
        prop_assert_eq!(&fg, &l1_distance(&g, f, m).unwrap());
        prop_assert!(l1_distance(f, f, m).unwrap().is_zero());
        prop_assert_eq!(fg.is_zero(), f == &g);
        prop_assert!(fg <= l1_distance(f, &h, m).unwrap() + l1_distance(&h, &g, m).unwrap());
    }

    #[test]
    fn l1_splits_over_partition_cells((inst, g) in with_second(5)) {
        let m = inst.marginal();
        let part = generated_partition(inst.groups(), inst.n()).unwrap();
        let total: Rational = part
            .cells
            .iter()
            .map(|c| group_mass(m, c) * conditional_l1(inst.audited(), &g, m, c).unwrap())
            .sum();
        prop_assert_eq!(total, l1_distance(inst.audited(), &g, m).unwrap());
    }

    #[test]
    fn hierarchy(inst in instance(5, 3)) {
        let w = wdmc(&inst).unwrap().value;
        let d = dmc(&inst).unwrap().value;
        let i = dimc(&inst).unwrap().value;
        prop_assert!(w <= d && d <= i, "{} {} {}", w, d, i);
        prop_assert!(i <= l1_distance(inst.audited(), inst.ground_truth(), inst.marginal()).unwrap());
    }

    #[test]
    fn dimc_is_dmc_on_closure_and_on_cells(inst in instance(5, 3)) {
        let i = dimc(&inst).unwrap();
        let closure = intersection_closure(inst.groups()).unwrap();
        let cells = generated_partition(inst.groups(), inst.n()).unwrap().as_collection();
        prop_assert_eq!(&i.value, &dmc(&inst.with_groups(closure).unwrap()).unwrap().value);
        prop_assert_eq!(&i.value, &dmc(&inst.with_groups(cells).unwrap()).unwrap().value);
    }

    #[test]
    fn closure_is_closed_and_contains_originals(inst in instance(5, 3)) {
        let c = intersection_closure(inst.groups()).unwrap();
        prop_assert_eq!(&c.groups()[..inst.groups().len()], inst.groups().groups());
        for a in c.iter() {
            for b in c.iter() {
                let both = a.intersect(b);
                if !both.is_empty() {
                    prop_assert!(c.groups().contains(&Subgroup::new(both).unwrap()));
                }
            }
        }
    }

    #[test]
    fn metrics_are_one_lipschitz((inst, g) in with_second(5)) {
        let other = inst.with_audited(g.clone()).unwrap();
        let gap = l1_distance(inst.audited(), &g, inst.marginal()).unwrap();
        prop_assert!((wdmc(&inst).unwrap().value - wdmc(&other).unwrap().value).abs() <= gap);
        prop_assert!((dmc(&inst).unwrap().value - dmc(&other).unwrap().value).abs() <= gap);
        prop_assert!((dimc(&inst).unwrap().value - dimc(&other).unwrap().value).abs() <= gap);
    }

    #[test]
    fn zero_exactly_on_the_perfect_sets(inst in instance(5, 3)) {
        for s in inst.groups().iter() {
            let r = dce(&inst, s).unwrap();
            prop_assert_eq!(r.value.is_zero(), is_calibrated(inst.audited(), &inst, s));
        }
        let d = dmc(&inst).unwrap();
        prop_assert_eq!(d.value.is_zero(), is_multicalibrated(inst.audited(), &inst));
        let set = multicalibrated_set(&inst).unwrap();
        for g in set.members.iter().take(4) {
            let at = inst.with_audited(g.clone()).unwrap();
            prop_assert!(dmc(&at).unwrap().value.is_zero());
        }
    }

    #[test]
    fn witnesses_are_members_at_the_reported_distance(inst in instance(5, 3)) {
        let m = inst.marginal();
        for s in inst.groups().iter() {
            let r = dce(&inst, s).unwrap();
            prop_assert!(calibrated_set(&inst, s).unwrap().contains(&r.witness));
            prop_assert_eq!(conditional_l1(inst.audited(), &r.witness, m, s).unwrap(), r.value);
        }
        let d = dmc(&inst).unwrap();
        prop_assert!(is_multicalibrated(&d.witness, &inst));
        prop_assert_eq!(l1_distance(inst.audited(), &d.witness, m).unwrap(), d.value.clone());
        let i = dimc(&inst).unwrap();
        let cells = generated_partition(inst.groups(), inst.n()).unwrap();
        for c in &cells.cells {
            prop_assert!(is_calibrated(&i.witness, &inst, c));
        }
        prop_assert_eq!(l1_distance(inst.audited(), &i.witness, m).unwrap(), i.value);
    }

    #[test]
    fn dmc_is_nearest_over_the_whole_set(inst in instance(4, 3)) {
        let set = multicalibrated_set(&inst).unwrap();
        let d = dmc(&inst).unwrap();
        for g in &set.members {
            let dist = l1_distance(inst.audited(), g, inst.marginal()).unwrap();
            prop_assert!(d.value < dist || (d.value == dist && d.witness <= *g));
        }
    }

    #[test]
    fn one_lipschitz_in_the_ground_truth((inst, p2) in with_second(5)) {
        let other = inst.with_ground_truth(p2.clone()).unwrap();
        let m = inst.marginal();
        let gap = l1_distance(inst.ground_truth(), &p2, m).unwrap();
        prop_assert!((dimc(&inst).unwrap().value - dimc(&other).unwrap().value).abs() <= gap.clone());
        prop_assert!((wdmc(&inst).unwrap().value - wdmc(&other).unwrap().value).abs() <= gap);
        for s in inst.groups().iter() {
            let local = conditional_l1(inst.ground_truth(), &p2, m, s).unwrap();
            prop_assert!((dce(&inst, s).unwrap().value - dce(&other, s).unwrap().value).abs() <= local);
        }
    }
}
