//! Set partitions and the finite sets `cal(D|S)` and `mcal_C(D)`.
//!
//! Every calibrated predictor on `S` is constant on the classes of its level
//! set partition and takes the `m`-weighted mean of `p*` there, so walking all
//! partitions of `S` finds all of `cal(D|S)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::budget::{self, Budget};
use crate::domain::{restricted_view, Instance, PredictorVec, Subgroup};
use crate::error::Result;
use crate::rational::Rational;

/// Bell number via the Bell triangle.
pub fn bell(k: usize) -> BigUint {
    let mut row = vec![BigUint::one()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().cloned().expect("row is non-empty"));
        for v in &row {
            let s = next.last().expect("just pushed") + v;
            next.push(s);
        }
        row = next;
    }
    row[0].clone()
}

/// A partition of `{0..k-1}`, classes ordered by smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    rgs: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl SetPartition {
    /// From a restricted growth string: `a[0] = 0`, `a[i] <= 1 + max(a[..i])`.
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let nc = rgs.iter().max().map_or(0, |m| m + 1);
        let mut classes = vec![Vec::new(); nc];
        for (i, &c) in rgs.iter().enumerate() {
            classes[c].push(i);
        }
        Self { rgs: rgs.to_vec(), classes }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn rgs(&self) -> &[usize] {
        &self.rgs
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.rgs[i]
    }
}

/// Streams the partitions of `{0..k-1}` in lexicographic order of their
/// restricted growth strings.
#[derive(Clone, Debug)]
pub struct Partitions {
    rgs: Vec<usize>,
    // prefix_max[i] = max(rgs[..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl Partitions {
    fn new(k: usize) -> Self {
        Self { rgs: vec![0; k], prefix_max: vec![0; k], done: k == 0 }
    }

    fn advance(&mut self) {
        let k = self.rgs.len();
        for i in (1..k).rev() {
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..k {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }

    /// Visits each restricted growth string without allocating a partition.
    pub(crate) fn for_each_rgs(mut self, mut visit: impl FnMut(&[usize], usize)) {
        while !self.done {
            let nc = self.prefix_max.last().map_or(0, |m| m + 1);
            visit(&self.rgs, nc);
            self.advance();
        }
    }
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let p = SetPartition::from_rgs(&self.rgs);
        self.advance();
        Some(p)
    }
}

/// Partitions of `{0..k-1}`, refusing `k` above the budget's ceiling.
pub fn partitions(k: usize, budget: &Budget) -> Result<Partitions> {
    if k == 0 {
        return Err(crate::error::Error::precondition("partitions of an empty set"));
    }
    budget.check_partition("set partitions", k)?;
    Ok(Partitions::new(k))
}

/// The calibrated predictors on `S`, stored restricted to `S` and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CalibratedSet {
    pub subgroup: Subgroup,
    pub predictors: Vec<PredictorVec>,
}

impl CalibratedSet {
    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn contains(&self, g: &PredictorVec) -> bool {
        self.predictors.binary_search(g).is_ok()
    }
}

/// `true` iff on every level set of `f` within `S` the weighted mean of `p*`
/// equals the level. `f` may be full-length or already restricted to `S`.
pub fn is_calibrated(f: &PredictorVec, inst: &Instance, s: &Subgroup) -> bool {
    let Ok(vals) = restricted_view(f, s, inst.n()) else {
        return false;
    };
    let m = inst.marginal();
    let p = inst.ground_truth();
    let mut levels: BTreeMap<&Rational, (Rational, Rational)> = BTreeMap::new();
    for (&x, v) in s.members().iter().zip(vals) {
        let e = levels.entry(v).or_insert_with(|| (Rational::zero(), Rational::zero()));
        e.0 += m.prob(x);
        e.1 += m.prob(x) * p.get(x);
    }
    levels.into_iter().all(|(v, (mass, mp))| v * mass == mp)
}

pub fn calibrated_set(inst: &Instance, s: &Subgroup) -> Result<CalibratedSet> {
    calibrated_set_with(inst, s, &Budget::default())
}

pub fn calibrated_set_with(inst: &Instance, s: &Subgroup, budget: &Budget) -> Result<CalibratedSet> {
    let k = s.len();
    budget.check_partition("calibrated set", k)?;
    let m = inst.marginal();
    let p = inst.ground_truth();
    let mass: Vec<&Rational> = s.members().iter().map(|&x| m.prob(x)).collect();
    let weighted: Vec<Rational> = s.members().iter().map(|&x| m.prob(x) * p.get(x)).collect();

    let mut seen = HashSet::new();
    let mut predictors = Vec::new();
    let mut sums = vec![(Rational::zero(), Rational::zero()); k];
    Partitions::new(k).for_each_rgs(|rgs, nc| {
        for e in sums.iter_mut().take(nc) {
            e.0.set_zero();
            e.1.set_zero();
        }
        for (i, &c) in rgs.iter().enumerate() {
            sums[c].0 += mass[i];
            sums[c].1 += &weighted[i];
        }
        let means: Vec<Rational> = sums[..nc].iter().map(|(a, b)| b / a).collect();
        // A partition with two equal class means yields the same predictor as
        // the partition that merges them, which is visited separately.
        let mut sorted: Vec<&Rational> = means.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let g = PredictorVec::from_trusted(rgs.iter().map(|&c| means[c].clone()).collect());
        debug_assert!(is_calibrated(&g, inst, s));
        if seen.insert(g.clone()) {
            predictors.push(g);
        }
    });
    predictors.sort();
    Ok(CalibratedSet { subgroup: s.clone(), predictors })
}

/// `mcal_C(D)`. Coordinates outside every group are unconstrained; they are
/// listed in `free` and hold a zero placeholder in each member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticalibratedSet {
    pub n: usize,
    pub free: Vec<usize>,
    pub members: Vec<PredictorVec>,
    /// Join nodes visited while building the set.
    pub nodes: u64,
}

impl MulticalibratedSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members with the free coordinates copied from `f`.
    pub fn filled(&self, f: &PredictorVec) -> Vec<PredictorVec> {
        self.members.iter().map(|g| self.fill(g, f)).collect()
    }

    pub fn fill(&self, g: &PredictorVec, f: &PredictorVec) -> PredictorVec {
        if self.free.is_empty() {
            return g.clone();
        }
        let mut v = g.values().to_vec();
        for &x in &self.free {
            v[x] = f.get(x).clone();
        }
        PredictorVec::from_trusted(v)
    }

    /// Whether `g` agrees with some member on every constrained coordinate.
    pub fn contains(&self, g: &PredictorVec) -> bool {
        let probe = self.fill(g, &self.zeros());
        self.members.binary_search(&probe).is_ok()
    }

    fn zeros(&self) -> PredictorVec {
        PredictorVec::from_trusted(vec![Rational::zero(); self.n])
    }
}

pub fn multicalibrated_set(inst: &Instance) -> Result<MulticalibratedSet> {
    multicalibrated_set_with(inst, &Budget::default())
}

pub fn multicalibrated_set_with(inst: &Instance, budget: &Budget) -> Result<MulticalibratedSet> {
    let groups = inst.groups().groups();
    if let Some(big) = groups.iter().find(|g| g.len() > budget.partition_ceiling) {
        return Err(budget::refuse(
            "multicalibrated set",
            format!("prod Bell(|S_i|) = {}", budget::product_bound(groups.iter().map(Subgroup::len))),
            format!("groups of size {} (largest is {})", budget.partition_ceiling, big.len()),
        ));
    }
    let cals = groups
        .iter()
        .map(|g| calibrated_set_with(inst, g, budget))
        .collect::<Result<Vec<_>>>()?;
    join(inst.n(), &cals, budget)
}

struct JoinStep<'a> {
    cal: &'a CalibratedSet,
    /// Global indices already fixed when this group is reached.
    overlap: Vec<usize>,
    /// (position in S, global index) of coordinates this group fixes.
    fresh: Vec<(usize, usize)>,
    index: HashMap<Vec<&'a Rational>, Vec<usize>>,
}

/// Joins per-group calibrated sets into `mcal`: keeps the tuples that agree on
/// every overlap and assembles the global predictor.
pub(crate) fn join(n: usize, cals: &[CalibratedSet], budget: &Budget) -> Result<MulticalibratedSet> {
    let order = join_order(n, cals);
    let mut fixed = vec![false; n];
    let mut steps = Vec::with_capacity(order.len());
    for &gi in &order {
        let cal = &cals[gi];
        let members = cal.subgroup.members();
        let overlap_pos: Vec<usize> = (0..members.len()).filter(|&i| fixed[members[i]]).collect();
        let fresh: Vec<(usize, usize)> =
            (0..members.len()).filter(|&i| !fixed[members[i]]).map(|i| (i, members[i])).collect();
        let mut index: HashMap<Vec<&Rational>, Vec<usize>> = HashMap::new();
        for (ci, g) in cal.predictors.iter().enumerate() {
            let key = overlap_pos.iter().map(|&i| g.get(i)).collect();
            index.entry(key).or_default().push(ci);
        }
        for &(_, x) in &fresh {
            fixed[x] = true;
        }
        steps.push(JoinStep {
            cal,
            overlap: overlap_pos.iter().map(|&i| members[i]).collect(),
            fresh,
            index,
        });
    }
    let free: Vec<usize> = (0..n).filter(|&x| !fixed[x]).collect();

    let mut state = JoinState {
        assignment: vec![None; n],
        members: Vec::new(),
        nodes: 0,
        limit: budget.join_nodes,
    };
    if !state.descend(&steps, 0) {
        return Err(budget::refuse(
            "multicalibrated join",
            format!(
                "prod |cal(D|S_i)| = {}, prod Bell(|S_i|) = {}",
                cals.iter().map(|c| BigUint::from(c.len())).product::<BigUint>(),
                budget::product_bound(cals.iter().map(|c| c.subgroup.len()))
            ),
            format!("{} join nodes", budget.join_nodes),
        ));
    }
    let mut members = state.members;
    members.sort();
    members.dedup();
    Ok(MulticalibratedSet { n, free, members, nodes: state.nodes })
}

struct JoinState<'a> {
    assignment: Vec<Option<&'a Rational>>,
    members: Vec<PredictorVec>,
    nodes: u64,
    limit: u64,
}

impl<'a> JoinState<'a> {
    /// Returns `false` once the node limit is exhausted.
    fn descend(&mut self, steps: &[JoinStep<'a>], depth: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.limit {
            return false;
        }
        let Some(step) = steps.get(depth) else {
            let zero = Rational::zero();
            let values = self.assignment.iter().map(|v| v.unwrap_or(&zero).clone()).collect();
            self.members.push(PredictorVec::from_trusted(values));
            return true;
        };
        let key: Vec<&Rational> =
            step.overlap.iter().map(|&x| self.assignment[x].expect("overlap is fixed")).collect();
        let Some(cands) = step.index.get(&key) else {
            return true;
        };
        for &ci in cands {
            let g = &step.cal.predictors[ci];
            for &(pos, x) in &step.fresh {
                self.assignment[x] = Some(g.get(pos));
            }
            if !self.descend(steps, depth + 1) {
                return false;
            }
        }
        for &(_, x) in &step.fresh {
            self.assignment[x] = None;
        }
        true
    }
}

/// Largest group first, then repeatedly the group sharing the most points
/// with those already joined (ties: fewer calibrated predictors, then index).
fn join_order(n: usize, cals: &[CalibratedSet]) -> Vec<usize> {
    let mut covered = vec![false; n];
    let mut left: Vec<usize> = (0..cals.len()).collect();
    let mut order = Vec::with_capacity(cals.len());
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                let key = |g: usize| {
                    let s = &cals[g].subgroup;
                    let ov = s.members().iter().filter(|&&x| covered[x]).count();
                    let primary = if order.is_empty() { s.len() } else { ov };
                    (primary, std::cmp::Reverse(cals[g].len()), std::cmp::Reverse(g))
                };
                key(a).cmp(&key(b))
            })
            .expect("left is non-empty");
        let g = left.remove(pos);
        for &x in cals[g].subgroup.members() {
            covered[x] = true;
        }
        order.push(g);
    }
    order
}

pub fn is_multicalibrated(f: &PredictorVec, inst: &Instance) -> bool {
    inst.groups().iter().all(|s| is_calibrated(f, inst, s))
}

pub fn is_multiaccurate(f: &PredictorVec, inst: &Instance) -> bool {
    is_degree_r_multicalibrated(f, inst, 1)
}

/// For every group and every `0 <= j < r`: `sum_{x in S} m(x) f(x)^j (f(x) - p*(x)) = 0`.
pub fn is_degree_r_multicalibrated(f: &PredictorVec, inst: &Instance, r: u32) -> bool {
    if f.len() != inst.n() {
        return false;
    }
    let m = inst.marginal();
    let p = inst.ground_truth();
    inst.groups().iter().all(|s| {
        let mut sums = vec![Rational::zero(); r as usize];
        for &x in s.members() {
            let resid = m.prob(x) * (f.get(x) - p.get(x));
            if resid.is_zero() {
                continue;
            }
            let mut pw = Rational::one();
            for acc in sums.iter_mut() {
                *acc += &pw * &resid;
                pw *= f.get(x);
            }
        }
        sums.iter().all(Zero::is_zero)
    })
}
