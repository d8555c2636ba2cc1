mod common;

use common::instance;
use mcal_core::distances::{dmc, dmc_lowdeg_bruteforce};
use mcal_core::enumerate::{is_degree_r_multicalibrated, is_multiaccurate};
use mcal_core::multiaccuracy::{acc_projection, bias, dma, wdma};
use mcal_core::rational::{int, q};
use mcal_core::{conditional_l1, l1_distance, Instance, PredictorVec, Rational, Subgroup, SubgroupCollection};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn with_second(max_n: usize) -> impl Strategy<Value = (Instance, PredictorVec)> {
    instance(max_n, 3).prop_flat_map(|inst| {
        let n = inst.n();
        let g = proptest::collection::vec(0i64..=10, n)
            .prop_map(|v| PredictorVec::new(v.into_iter().map(|x| q(x, 10)).collect()).unwrap());
        (Just(inst), g)
    })
}

/// Exact grid search for degree-1 residuals: every group bias at most `1/(2G)`.
fn degree_one_grid(inst: &Instance, grid: i64) -> Rational {
    let n = inst.n();
    let tol = q(1, 2 * grid);
    let mut best: Option<Rational> = None;
    let mut a = vec![0i64; n];
    loop {
        let g = PredictorVec::new(a.iter().map(|&v| q(v, grid)).collect()).unwrap();
        if inst.groups().iter().all(|s| bias(&g, inst, s).unwrap() <= tol) {
            let d = l1_distance(inst.audited(), &g, inst.marginal()).unwrap();
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
        let Some(i) = (0..n).rev().find(|&i| a[i] < grid) else { break };
        a[i] += 1;
        a[i + 1..].iter_mut().for_each(|v| *v = 0);
    }
    best.unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_group_dma_is_the_bias(inst in instance(5, 1)) {
        let n = inst.n();
        let full = Subgroup::full(n);
        let one = inst.with_groups(SubgroupCollection::new(vec![full.clone()]).unwrap()).unwrap();
        let b = bias(inst.audited(), &inst, &full).unwrap();
        prop_assert_eq!(&dma(&one).unwrap().value, &b);
        let proj = acc_projection(inst.audited(), &inst, &full).unwrap();
        prop_assert_eq!(&proj.value, &b);
        prop_assert_eq!(conditional_l1(inst.audited(), &proj.witness, inst.marginal(), &full).unwrap(), b);
        prop_assert!(bias(&proj.witness, &inst, &full).unwrap().is_zero());
    }

    #[test]
    fn projection_onto_each_group(inst in instance(5, 3)) {
        for s in inst.groups().iter() {
            let proj = acc_projection(inst.audited(), &inst, s).unwrap();
            prop_assert_eq!(&proj.value, &bias(inst.audited(), &inst, s).unwrap());
            prop_assert!(bias(&proj.witness, &inst, s).unwrap().is_zero());
            prop_assert!(proj.witness.values().iter().all(|v| !v.is_negative() && *v <= int(1)));
        }
    }

    #[test]
    fn dma_bounds((inst, _g) in with_second(5)) {
        let d = dma(&inst).unwrap();
        let w = wdma(&inst).unwrap().value;
        prop_assert!(is_multiaccurate(&d.witness, &inst));
        prop_assert_eq!(l1_distance(inst.audited(), &d.witness, inst.marginal()).unwrap(), d.value.clone());
        prop_assert!(d.value <= l1_distance(inst.audited(), inst.ground_truth(), inst.marginal()).unwrap());
        prop_assert!(w <= d.value.clone());
        prop_assert!(d.value <= dmc(&inst).unwrap().value);
        prop_assert_eq!(w.is_zero(), d.value.is_zero());
        prop_assert_eq!(d.value.is_zero(), is_multiaccurate(inst.audited(), &inst));
    }

    #[test]
    fn dma_is_convex_and_lipschitz((inst, g) in with_second(5), k in 0i64..=4) {
        let lambda = q(k, 4);
        let other = inst.with_audited(g.clone()).unwrap();
        let mixed = inst.with_audited(inst.audited().mix(&g, &lambda).unwrap()).unwrap();
        let (a, b, c) = (dma(&inst).unwrap(), dma(&other).unwrap(), dma(&mixed).unwrap());
        prop_assert!(c.value <= &lambda * &a.value + (int(1) - &lambda) * &b.value);
        let mid = a.witness.mix(&b.witness, &q(1, 2)).unwrap();
        prop_assert!(is_multiaccurate(&mid, &inst));
        let gap = l1_distance(inst.audited(), &g, inst.marginal()).unwrap();
        prop_assert!((a.value - b.value).abs() <= gap);
    }

    #[test]
    fn degree_one_grid_search_agrees_with_exact_oracle(inst in instance(3, 2), grid in 1u32..=4) {
        let r = dmc_lowdeg_bruteforce(&inst, 1, grid).unwrap();
        prop_assert_eq!(&r.value, &degree_one_grid(&inst, grid as i64));
        prop_assert_eq!(r.candidates, (grid as u64 + 1).pow(inst.n() as u32));
        for s in inst.groups().iter() {
            prop_assert!(bias(&r.witness, &inst, s).unwrap() <= r.threshold);
        }
    }

    #[test]
    fn degree_one_is_multiaccuracy(inst in instance(5, 3)) {
        prop_assert_eq!(
            is_degree_r_multicalibrated(inst.audited(), &inst, 1),
            is_multiaccurate(inst.audited(), &inst)
        );
        if is_degree_r_multicalibrated(inst.audited(), &inst, 2) {
            prop_assert!(is_multiaccurate(inst.audited(), &inst));
        }
    }
}
