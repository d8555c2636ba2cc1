//! Exact distance metrics: dCE, wdMC, dMC, dIMC, dCMA and the low-degree grid oracle.
//!
//! Every minimum is attained on a finite candidate set, so each metric comes
//! with a witness. Among equally near candidates the lexicographically
//! smallest value vector wins.

use std::collections::{BTreeMap, HashSet};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::budget::{self, Budget};
use crate::domain::{group_mass, restricted_view, Instance, PredictorVec, Subgroup, SubgroupCollection};
use crate::enumerate::{
    calibrated_set_with, is_multiaccurate, multicalibrated_set_with, CalibratedSet, MulticalibratedSet,
};
use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceResult {
    pub value: Rational,
    pub witness: PredictorVec,
}

/// Worst group under a mass-weighted per-group score.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorstGroup {
    pub value: Rational,
    /// Index into the collection of the first group attaining the maximum.
    pub group: usize,
    pub per_group: Vec<Rational>,
}

pub(crate) fn worst_of(per_group: Vec<Rational>) -> WorstGroup {
    let mut best = 0;
    for (i, v) in per_group.iter().enumerate() {
        if *v > per_group[best] {
            best = i;
        }
    }
    WorstGroup { value: per_group[best].clone(), group: best, per_group }
}

/// Nearest member of `cal` to `f` in the conditional distance on its subgroup.
pub(crate) fn nearest_calibrated(inst: &Instance, f: &PredictorVec, cal: &CalibratedSet) -> Result<DistanceResult> {
    let s = &cal.subgroup;
    let fs = restricted_view(f, s, inst.n())?;
    let weights: Vec<&Rational> = s.members().iter().map(|&x| inst.marginal().prob(x)).collect();
    let mut best: Option<(Rational, usize)> = None;
    for (i, g) in cal.predictors.iter().enumerate() {
        let mut d = Rational::zero();
        for ((w, a), b) in weights.iter().zip(&fs).zip(g.values()) {
            if *a != b {
                d += *w * (*a - b).abs();
            }
        }
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, i));
        }
    }
    let (d, i) = best.ok_or_else(|| Error::precondition("calibrated set is empty"))?;
    Ok(DistanceResult { value: d / group_mass(inst.marginal(), s), witness: cal.predictors[i].clone() })
}

/// `dCE_{D|S}(f)`: conditional distance from `f|S` to `cal(D|S)`. The witness is restricted to `S`.
pub fn dce(inst: &Instance, s: &Subgroup) -> Result<DistanceResult> {
    dce_with(inst, s, &Budget::default())
}

pub fn dce_with(inst: &Instance, s: &Subgroup, budget: &Budget) -> Result<DistanceResult> {
    let cal = calibrated_set_with(inst, s, budget)?;
    nearest_calibrated(inst, inst.audited(), &cal)
}

/// `max_S Pr[S] * dCE_{D|S}(f)`.
pub fn wdmc(inst: &Instance) -> Result<WorstGroup> {
    wdmc_with(inst, &Budget::default())
}

pub fn wdmc_with(inst: &Instance, budget: &Budget) -> Result<WorstGroup> {
    let per = inst
        .groups()
        .iter()
        .map(|s| Ok(group_mass(inst.marginal(), s) * dce_with(inst, s, budget)?.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst_of(per))
}

/// Nearest member of `mcal` to `f`; free coordinates copy `f`.
pub(crate) fn nearest_multicalibrated(
    inst: &Instance,
    f: &PredictorVec,
    set: &MulticalibratedSet,
) -> Result<DistanceResult> {
    let m = inst.marginal().probs();
    let mut free = vec![false; set.n];
    for &x in &set.free {
        free[x] = true;
    }
    let mut best: Option<(Rational, usize)> = None;
    for (i, g) in set.members.iter().enumerate() {
        let mut d = Rational::zero();
        for x in 0..set.n {
            if !free[x] && f.get(x) != g.get(x) {
                d += &m[x] * (f.get(x) - g.get(x)).abs();
            }
        }
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, i));
        }
    }
    let (d, i) = best.ok_or_else(|| Error::precondition("multicalibrated set is empty"))?;
    Ok(DistanceResult { value: d, witness: set.fill(&set.members[i], f) })
}

/// `dMC_C(f)`: distance from `f` to `mcal_C(D)`.
pub fn dmc(inst: &Instance) -> Result<DistanceResult> {
    dmc_with(inst, &Budget::default())
}

pub fn dmc_with(inst: &Instance, budget: &Budget) -> Result<DistanceResult> {
    let set = multicalibrated_set_with(inst, budget)?;
    nearest_multicalibrated(inst, inst.audited(), &set)
}

/// All distinct non-empty intersections of non-empty subfamilies of `C`:
/// the original groups first, then new sets in discovery order.
pub fn intersection_closure(c: &SubgroupCollection) -> Result<SubgroupCollection> {
    intersection_closure_with(c, &Budget::default())
}

pub fn intersection_closure_with(c: &SubgroupCollection, budget: &Budget) -> Result<SubgroupCollection> {
    let k = c.len();
    if k > budget.closure_groups {
        return Err(budget::refuse(
            "intersection closure",
            format!("2^{k} subfamilies"),
            format!("{} groups", budget.closure_groups),
        ));
    }
    let mut out: Vec<Subgroup> = c.groups().to_vec();
    let mut seen: HashSet<Subgroup> = out.iter().cloned().collect();
    // Depth-first over subfamilies with increasing indices; an empty running
    // intersection prunes every extension.
    fn walk(
        groups: &[Subgroup],
        start: usize,
        current: &Subgroup,
        out: &mut Vec<Subgroup>,
        seen: &mut HashSet<Subgroup>,
    ) {
        for j in start..groups.len() {
            let inter = current.intersect(&groups[j]);
            if inter.is_empty() {
                continue;
            }
            let next = Subgroup::from_sorted(inter);
            if seen.insert(next.clone()) {
                out.push(next.clone());
            }
            walk(groups, j + 1, &next, out, seen);
        }
    }
    for i in 0..k {
        walk(c.groups(), i + 1, &c.groups()[i], &mut out, &mut seen);
    }
    SubgroupCollection::new(out)
}

/// Cells of points sharing the same group-membership signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratedPartition {
    pub cells: Vec<Subgroup>,
    /// For each cell, the indices of the groups containing it.
    pub origin: Vec<Vec<usize>>,
}

impl GeneratedPartition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn as_collection(&self) -> SubgroupCollection {
        SubgroupCollection::new(self.cells.clone()).expect("cells are distinct and non-empty")
    }
}

/// `J(C)` over the domain `0..n`; cells appear in order of their smallest point.
pub fn generated_partition(c: &SubgroupCollection, n: usize) -> Result<GeneratedPartition> {
    let uncovered = c.uncovered(n);
    if !uncovered.is_empty() {
        return Err(Error::NotCovering(uncovered));
    }
    let mut signature = vec![Vec::new(); n];
    for (i, g) in c.iter().enumerate() {
        for &x in g.members() {
            signature[x].push(i);
        }
    }
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut origin: Vec<Vec<usize>> = Vec::new();
    let mut by_sig: BTreeMap<&[usize], usize> = BTreeMap::new();
    for (x, sig) in signature.iter().enumerate() {
        let id = *by_sig.entry(sig.as_slice()).or_insert_with(|| {
            cells.push(Vec::new());
            origin.push(sig.clone());
            cells.len() - 1
        });
        cells[id].push(x);
    }
    Ok(GeneratedPartition { cells: cells.into_iter().map(Subgroup::from_sorted).collect(), origin })
}

/// `dIMC_C(f)`, which equals the continuized distance to multicalibration:
/// the sum over cells of `J(C)` of cell mass times the cell's dCE.
pub fn dimc(inst: &Instance) -> Result<DistanceResult> {
    dimc_with(inst, &Budget::default())
}

pub fn dimc_with(inst: &Instance, budget: &Budget) -> Result<DistanceResult> {
    let part = generated_partition(inst.groups(), inst.n())?;
    let cals = part
        .cells
        .iter()
        .map(|c| calibrated_set_with(inst, c, budget))
        .collect::<Result<Vec<_>>>()?;
    dimc_from_cells(inst, inst.audited(), &cals)
}

pub(crate) fn dimc_from_cells(inst: &Instance, f: &PredictorVec, cells: &[CalibratedSet]) -> Result<DistanceResult> {
    let mut value = Rational::zero();
    let mut witness = vec![Rational::zero(); inst.n()];
    for cal in cells {
        let r = nearest_calibrated(inst, f, cal)?;
        value += group_mass(inst.marginal(), &cal.subgroup) * r.value;
        for (&x, v) in cal.subgroup.members().iter().zip(r.witness.into_values()) {
            witness[x] = v;
        }
    }
    Ok(DistanceResult { value, witness: PredictorVec::from_trusted(witness) })
}

/// Distance to predictors that are globally calibrated and multiaccurate on `C`.
pub fn dcma(inst: &Instance) -> Result<DistanceResult> {
    dcma_with(inst, &Budget::default())
}

pub fn dcma_with(inst: &Instance, budget: &Budget) -> Result<DistanceResult> {
    let full = Subgroup::full(inst.n());
    let mut cal = calibrated_set_with(inst, &full, budget)?;
    cal.predictors.retain(|g| is_multiaccurate(g, inst));
    let r = nearest_calibrated(inst, inst.audited(), &cal)?;
    Ok(DistanceResult { value: r.value, witness: r.witness })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowDegreeReport {
    pub value: Rational,
    pub witness: PredictorVec,
    /// Grid resolution `G`; candidates are the vectors with entries in `{0, 1/G, ..., 1}`.
    pub grid: u32,
    /// Accepted residual bound `1/(2G)` on each conditional degree-`r` moment.
    pub threshold: Rational,
    pub candidates: u64,
    pub accepted: u64,
}

/// Grid oracle for the distance to degree-`r` multicalibration on tiny domains.
///
/// A grid point `g` is accepted when for every group `S` and `j < r`,
/// `|E_{D|S}[g^j (g - p*)]| <= 1/(2G)`.
pub fn dmc_lowdeg_bruteforce(inst: &Instance, r: u32, grid: u32) -> Result<LowDegreeReport> {
    dmc_lowdeg_bruteforce_with(inst, r, grid, &Budget::default())
}

pub fn dmc_lowdeg_bruteforce_with(inst: &Instance, r: u32, grid: u32, budget: &Budget) -> Result<LowDegreeReport> {
    let n = inst.n();
    if r == 0 || grid == 0 {
        return Err(Error::precondition("degree and grid must be positive"));
    }
    if n > budget.grid_points {
        return Err(budget::refuse(
            "low-degree grid search",
            format!("domain of {n} points"),
            format!("{} points", budget.grid_points),
        ));
    }
    let total = (grid as u64 + 1).checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > budget.grid_candidates {
        return Err(budget::refuse(
            "low-degree grid search",
            format!("({grid}+1)^{n} = {total} candidates"),
            format!("{} candidates", budget.grid_candidates),
        ));
    }
    let overflow = || Error::precondition("grid search arithmetic exceeds 128 bits; use a coarser grid");
    let m = inst.marginal().probs();
    let p = inst.ground_truth().values();
    let f = inst.audited().values();
    let common = |v: &[Rational]| v.iter().fold(num_bigint::BigInt::from(1), |acc, r| acc.lcm(r.denom()));
    let (dm, dp, df) = (common(m), common(p), common(f));
    let scaled = |v: &[Rational], d: &num_bigint::BigInt| -> Result<Vec<i128>> {
        v.iter().map(|r| (r.numer() * (d / r.denom())).to_i128().ok_or_else(overflow)).collect()
    };
    let (mi, pi, fi) = (scaled(m, &dm)?, scaled(p, &dp)?, scaled(f, &df)?);
    let dp_i = dp.to_i128().ok_or_else(overflow)?;
    let df_i = df.to_i128().ok_or_else(overflow)?;
    let g = grid as i128;

    struct GroupCheck {
        members: Vec<usize>,
        // bound_j = G^j * Dp * M(S); accept iff 2|sum_j| <= bound_j
        bounds: Vec<i128>,
    }
    let checks = inst
        .groups()
        .iter()
        .map(|s| {
            let ms: i128 = s.members().iter().map(|&x| mi[x]).sum();
            let mut bounds = Vec::with_capacity(r as usize);
            let mut gp: i128 = 1;
            for _ in 0..r {
                bounds.push(gp.checked_mul(dp_i).and_then(|v| v.checked_mul(ms)).ok_or_else(overflow)?);
                gp = gp.checked_mul(g).ok_or_else(overflow)?;
            }
            Ok(GroupCheck { members: s.members().to_vec(), bounds })
        })
        .collect::<Result<Vec<_>>>()?;

    let accept = |a: &[i128]| -> Result<bool> {
        for c in &checks {
            for (j, bound) in c.bounds.iter().enumerate() {
                let mut sum: i128 = 0;
                for &x in &c.members {
                    let resid = a[x] * dp_i - pi[x] * g;
                    let term = (0..j)
                        .try_fold(mi[x].checked_mul(resid), |acc, _| Some(acc?.checked_mul(a[x])))
                        .flatten()
                        .ok_or_else(overflow)?;
                    sum = sum.checked_add(term).ok_or_else(overflow)?;
                }
                if sum.checked_abs().and_then(|s| s.checked_mul(2)).ok_or_else(overflow)? > *bound {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };

    let mut a = vec![0i128; n];
    let mut best: Option<(i128, Vec<i128>)> = None;
    let (mut candidates, mut accepted) = (0u64, 0u64);
    loop {
        candidates += 1;
        if accept(&a)? {
            accepted += 1;
            // sum_x M_x |F_x G - a_x Df|, proportional to l1(f, a/G)
            let mut obj: i128 = 0;
            for x in 0..n {
                obj += mi[x] * (fi[x] * g - a[x] * df_i).abs();
            }
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, a.clone()));
            }
        }
        // Odometer with the last coordinate fastest, so candidates arrive in lexicographic order.
        let mut i = n;
        let exhausted = loop {
            if i == 0 {
                break true;
            }
            i -= 1;
            if a[i] < g {
                a[i] += 1;
                break false;
            }
            a[i] = 0;
        };
        if exhausted {
            break;
        }
    }
    let (obj, best_a) = best.ok_or_else(|| Error::precondition("no grid point passes the residual test"))?;
    let denom = num_bigint::BigInt::from(grid) * &dm * &df;
    let value = Rational::new(obj.into(), denom);
    let witness = PredictorVec::from_trusted(best_a.iter().map(|&v| Rational::new(v.into(), g.into())).collect());
    Ok(LowDegreeReport {
        value,
        witness,
        grid,
        threshold: Rational::new(1.into(), (2 * g).into()),
        candidates,
        accepted,
    })
}

impl LowDegreeReport {
    pub fn describe(&self) -> String {
        format!(
            "{} (grid 1/{}, residual threshold {})",
            format_rational(&self.value),
            self.grid,
            format_rational(&self.threshold)
        )
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_three_point;
    use crate::rational::q;

    #[test]
    fn worst_group_takes_the_first_maximum() {
        let w = worst_of(vec![q(1, 3), q(1, 2), q(1, 2)]);
        assert_eq!((w.group, w.value), (1, q(1, 2)));
    }

    #[test]
    fn uncovered_points_are_named() {
        let c = SubgroupCollection::from_lists(vec![vec![0], vec![2]]).unwrap();
        match generated_partition(&c, 4) {
            Err(Error::NotCovering(v)) => assert_eq!(v, vec![1, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_oracle_refuses_large_domains() {
        let inst = gen_three_point(&q(1, 10)).unwrap();
        let tight = Budget { grid_points: 2, ..Budget::default() };
        assert!(matches!(dmc_lowdeg_bruteforce_with(&inst, 1, 4, &tight), Err(Error::Budget { .. })));
        let r = dmc_lowdeg_bruteforce(&inst, 1, 10).unwrap();
        assert_eq!(r.candidates, 11u64.pow(3));
        assert_eq!(r.threshold, q(1, 20));
        assert!(r.accepted >= 1);
    }
}
