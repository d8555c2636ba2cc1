#![allow(dead_code)]

use std::collections::BTreeSet;

use mcal_core::rational::q;
use mcal_core::{Instance, Rational};
use proptest::prelude::*;

/// Small covering instances with coarse grids, so equal class means and ties are common.
pub fn instance(max_n: usize, max_groups: usize) -> impl Strategy<Value = Instance> {
    (2..=max_n).prop_flat_map(move |n| {
        let full = (1u32 << n) - 1;
        (
            proptest::collection::vec(1i64..=4, n),
            prop_oneof![Just(2i64), Just(4), Just(5)],
            proptest::collection::vec(0i64..=20, n),
            proptest::collection::vec(0i64..=10, n),
            proptest::collection::vec(1..=full, 1..=max_groups),
        )
            .prop_map(move |(w, den, p, f, masks)| build(n, &w, den, &p, &f, &masks))
    })
}

fn build(n: usize, w: &[i64], den: i64, p: &[i64], f: &[i64], masks: &[u32]) -> Instance {
    let total: i64 = w.iter().sum();
    let marginal = w.iter().map(|&x| q(x, total)).collect();
    let p_star = p.iter().map(|&x| q(x % (den + 1), den)).collect();
    let f = f.iter().map(|&x| q(x, 10)).collect();
    let mut seen = BTreeSet::new();
    let mut covered = 0u32;
    let mut groups = Vec::new();
    for &m in masks {
        if seen.insert(m) {
            covered |= m;
            groups.push(bits(m, n));
        }
    }
    let rest = ((1u32 << n) - 1) & !covered;
    if rest != 0 && seen.insert(rest) {
        groups.push(bits(rest, n));
    }
    Instance::build(marginal, p_star, f, groups).unwrap()
}

fn bits(m: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| m >> i & 1 == 1).collect()
}

/// All set partitions of `0..n`, as block lists.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for x in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut p2: Vec<Vec<usize>> = p.clone();
                p2[b].push(x);
                next.push(p2);
            }
            let mut p2 = p.clone();
            p2.push(vec![x]);
            next.push(p2);
        }
        out = next;
    }
    out
}

pub fn mean_p(inst: &Instance, xs: &[usize]) -> Rational {
    let m = inst.marginal();
    let mass: Rational = xs.iter().map(|&x| m.prob(x)).sum();
    xs.iter().map(|&x| m.prob(x) * inst.ground_truth().get(x)).sum::<Rational>() / mass
}
