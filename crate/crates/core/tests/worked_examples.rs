//! Spot values of every metric on the hand-built instance families.

use mcal_core::distances::{
    dce, dcma, dimc, dmc, dmc_lowdeg_bruteforce, generated_partition, intersection_closure, wdmc,
};
use mcal_core::enumerate::{
    calibrated_set, is_calibrated, is_degree_r_multicalibrated, is_multiaccurate, is_multicalibrated,
    multicalibrated_set,
};
use mcal_core::instances::{
    fibonacci, gen_cdmc_example, gen_dcma_example, gen_fibonacci, gen_hypercube, gen_ring, gen_three_point,
    gen_wdmc_local_min, FibonacciGroups,
};
use mcal_core::landscape::{local_min_probe, Metric};
use mcal_core::multiaccuracy::{acc_projection, bias, dma, wdma};
use mcal_core::rational::{int, q};
use mcal_core::{group_mass, l1_distance, Rational, Subgroup, SubgroupCollection};
use num_traits::Zero;

fn sg(v: &[usize]) -> Subgroup {
    Subgroup::new(v.to_vec()).unwrap()
}

fn three_point_value(alpha: &Rational) -> Rational {
    q(3, 10) + alpha / int(3)
}

#[test]
fn three_point_curve() {
    for alpha in [q(0, 1), q(1, 20), q(1, 10), q(1, 5)] {
        let inst = gen_three_point(&alpha).unwrap();
        let d = dmc(&inst).unwrap();
        let expected = if alpha.is_zero() { int(0) } else { three_point_value(&alpha) };
        assert_eq!(d.value, expected, "dmc at alpha {alpha}");
        assert!(is_multicalibrated(&d.witness, &inst));
        assert_eq!(l1_distance(inst.audited(), &d.witness, inst.marginal()).unwrap(), d.value);

        let di = dimc(&inst).unwrap();
        assert_eq!(di.value, three_point_value(&alpha), "dimc at alpha {alpha}");
        assert_eq!(&di.witness, inst.ground_truth());
    }
    assert_eq!(dmc(&gen_three_point(&q(1, 5)).unwrap()).unwrap().value, q(11, 30));
}

#[test]
fn three_point_dce_and_wdmc() {
    let inst = gen_three_point(&q(0, 1)).unwrap();
    let r = dce(&inst, &sg(&[0, 1])).unwrap();
    assert!(r.value.is_zero());
    assert_eq!(r.witness.values(), &[q(1, 2), q(1, 2)]);

    let inst = gen_three_point(&q(1, 10)).unwrap();
    let r = dce(&inst, &sg(&[1, 2])).unwrap();
    assert_eq!(r.value, q(1, 20));
    assert_eq!(r.witness.values(), &[q(11, 20), q(11, 20)]);
    let w = wdmc(&inst).unwrap();
    assert_eq!(w.value, q(1, 30));
    assert_eq!(w.group, 1);
    assert!(wdma(&gen_three_point(&q(0, 1)).unwrap()).unwrap().value.is_zero());
}

#[test]
fn closure_and_partition_of_overlapping_pairs() {
    let c = SubgroupCollection::from_lists(vec![vec![0, 1], vec![1, 2]]).unwrap();
    let i = intersection_closure(&c).unwrap();
    assert_eq!(i.groups(), &[sg(&[0, 1]), sg(&[1, 2]), sg(&[1])]);
    let j = generated_partition(&c, 3).unwrap();
    assert_eq!(j.cells, vec![sg(&[0]), sg(&[1]), sg(&[2])]);
    assert_eq!(j.origin, vec![vec![0], vec![0, 1], vec![1]]);
    assert!(generated_partition(&c, 4).is_err());

    let single = SubgroupCollection::from_lists(vec![vec![0, 2]]).unwrap();
    assert_eq!(intersection_closure(&single).unwrap(), single);
}

#[test]
fn ring_family() {
    let inst = gen_ring(1).unwrap();
    for s in inst.groups().iter().take(4) {
        assert_eq!(group_mass(inst.marginal(), s), q(1, 2));
    }
    assert!(dmc(&inst).unwrap().value.is_zero());
    assert_eq!(dimc(&inst).unwrap().value, q(3, 10));
    let j = generated_partition(inst.groups(), inst.n()).unwrap();
    assert_eq!(j.len(), 4);

    let closure = intersection_closure(inst.groups()).unwrap();
    for x in 0..4 {
        assert!(closure.groups().contains(&Subgroup::singleton(x)));
    }

    let ring2 = gen_ring(2).unwrap();
    assert!(dmc(&ring2).unwrap().value.is_zero());
    assert_eq!(dimc(&ring2).unwrap().value, q(3, 10));
    let cells = generated_partition(ring2.groups(), ring2.n()).unwrap();
    assert_eq!(cells.cells, vec![sg(&[0, 1]), sg(&[2, 3]), sg(&[4, 5]), sg(&[6, 7])]);
}

#[test]
fn hypercube_family() {
    let h = gen_hypercube(4).unwrap();
    let j = generated_partition(h.base.groups(), h.base.n()).unwrap();
    assert_eq!(j.len(), 8);
    assert!(j.cells.iter().all(|c| c.len() == 1));
    assert!(dimc(&h.base).unwrap().value.is_zero());
    for seed in 0..5 {
        let t = h.random_subset(seed);
        let inst = h.with_subset(&t).unwrap();
        assert_eq!(dimc(&inst).unwrap().value, q(1, 2));
    }
}

#[test]
fn cdmc_example() {
    let inst = gen_cdmc_example().unwrap();
    assert!(dimc(&inst).unwrap().value.is_zero());
    assert!(dmc(&inst).unwrap().value.is_zero());
    assert_eq!(l1_distance(inst.audited(), inst.ground_truth(), inst.marginal()).unwrap(), q(3, 20));
    assert!(is_multicalibrated(inst.audited(), &inst));
    let set = multicalibrated_set(&inst).unwrap();
    assert!(set.contains(inst.ground_truth()) && set.contains(inst.audited()));
    assert!(dma(&inst).unwrap().value.is_zero());
}

#[test]
fn fibonacci_family() {
    for k in [3usize, 4, 5] {
        let fk1 = Rational::from_integer(fibonacci(k as u32 + 1));
        let eps = int(1) / (int(4 * (k as i64 + 1)) * &fk1);
        let inst = gen_fibonacci(k, &eps).unwrap();
        let groups = FibonacciGroups::for_k(k);
        let delta = int(2 * (k as i64 + 1)) * &eps;
        let all = inst.groups().groups();
        for &i in groups.u.iter().chain(&groups.v) {
            assert!(bias(inst.audited(), &inst, &all[i]).unwrap().is_zero());
        }
        assert_eq!(bias(inst.audited(), &inst, &all[groups.w]).unwrap(), &delta / int(2));
        assert_eq!(wdma(&inst).unwrap().value, eps);
        let d = dma(&inst).unwrap();
        assert!(d.value >= &fk1 * &eps / int(3), "k = {k}");
        assert!(is_multiaccurate(&d.witness, &inst));
        assert_eq!(l1_distance(inst.audited(), &d.witness, inst.marginal()).unwrap(), d.value);

        let proj = acc_projection(inst.audited(), &inst, &all[groups.w]).unwrap();
        assert_eq!(proj.value, &delta / int(2));
    }
}

#[test]
fn dcma_discontinuity() {
    let (base, perturbed) = gen_dcma_example(&q(1, 100)).unwrap();
    assert!(is_calibrated(base.audited(), &base, &Subgroup::full(6)));
    assert!(dcma(&base).unwrap().value.is_zero());
    let r = dcma(&perturbed).unwrap();
    assert!(r.value > q(1, 60), "{}", r.value);
    assert!(is_multiaccurate(&r.witness, &perturbed));
    assert!(is_calibrated(&r.witness, &perturbed, &Subgroup::full(6)));
    assert!(dcma(&base.with_audited(base.ground_truth().clone()).unwrap()).unwrap().value.is_zero());
}

#[test]
fn low_degree_discontinuity() {
    let at0 = gen_three_point(&q(0, 1)).unwrap();
    let at1 = gen_three_point(&q(1, 10)).unwrap();
    assert!(is_degree_r_multicalibrated(at0.audited(), &at0, 2));
    assert!(!is_degree_r_multicalibrated(at1.audited(), &at1, 2));
    assert!(dmc_lowdeg_bruteforce(&at0, 2, 10).unwrap().value.is_zero());
    let far = dmc_lowdeg_bruteforce(&at1, 2, 100).unwrap();
    assert!(far.value >= q(3, 10), "{}", far.describe());
}

#[test]
fn wdmc_local_minimum() {
    let eps = q(1, 200);
    let delta = q(1, 10);
    let inst = gen_wdmc_local_min(&eps, &delta).unwrap();
    assert_eq!(wdmc(&inst).unwrap().value, eps);
    let at_truth = inst.with_audited(inst.ground_truth().clone()).unwrap();
    assert!(wdmc(&at_truth).unwrap().value.is_zero());

    let probe = local_min_probe(Metric::Wdmc, &inst, &q(1, 100), 500, 11).unwrap();
    assert!(!probe.found_decrease());
    let probe = local_min_probe(Metric::Dimc, &inst, &q(1, 100), 200, 11).unwrap();
    assert!(probe.found_decrease());
}

#[test]
fn calibrated_sets_respect_bell_bound() {
    let inst = gen_ring(2).unwrap();
    let full = Subgroup::full(8);
    let cal = calibrated_set(&inst, &full).unwrap();
    assert!(cal.len() as u64 <= 4140);
    assert!(cal.predictors.iter().all(|g| is_calibrated(g, &inst, &full)));
}
