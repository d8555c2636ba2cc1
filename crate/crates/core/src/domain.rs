//! Finite domains, marginals, predictors and subgroup collections.
//!
//! Points of the domain are the indices `0..n`; labels are cosmetic. All
//! types are immutable once constructed and validated, so an [`Instance`]
//! can be shared freely across threads.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, format_rational, int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDomain {
    n: usize,
    labels: Option<Vec<String>>,
}

impl FiniteDomain {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::precondition("domain must contain at least one point"));
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut d = Self::new(labels.len())?;
        d.labels = Some(labels);
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => format!("x{}", x + 1),
        }
    }
}

/// Marginal distribution over the domain, with full support.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Marginal {
    probs: Vec<Rational>,
}

impl Marginal {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::precondition("marginal over an empty domain"));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_positive()) {
            return Err(Error::precondition(format!("marginal mass at x{} is not positive", i + 1)));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::precondition(format!(
                "marginal sums to {}, not 1",
                format_rational(&total)
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::precondition("marginal over an empty domain"));
        }
        Ok(Self { probs: vec![rational::q(1, n as i64); n] })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, x: usize) -> &Rational {
        &self.probs[x]
    }
}

/// A predictor `X -> [0,1]` stored densely. Also used for restrictions to a
/// subgroup, in which case coordinate `i` refers to the `i`-th member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredictorVec {
    values: Vec<Rational>,
}

impl PredictorVec {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_negative() || *v > int(1)) {
            return Err(Error::precondition(format!(
                "prediction {} at coordinate {i} lies outside [0,1]",
                format_rational(&values[i])
            )));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, v: Rational) -> Result<Self> {
        Self::new(vec![v; n])
    }

    /// Caller guarantees every value lies in `[0,1]`.
    pub(crate) fn from_trusted(values: Vec<Rational>) -> Self {
        debug_assert!(values.iter().all(|v| !v.is_negative() && *v <= int(1)));
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, x: usize) -> &Rational {
        &self.values[x]
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.values
    }

    /// The restriction `f|S`, indexed by position within `S`.
    pub fn restrict(&self, s: &Subgroup) -> PredictorVec {
        Self { values: s.members().iter().map(|&x| self.values[x].clone()).collect() }
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &PredictorVec, lambda: &Rational) -> Result<PredictorVec> {
        check_dims(self.len(), other.len())?;
        if lambda.is_negative() || *lambda > int(1) {
            return Err(Error::precondition("mixing weight outside [0,1]"));
        }
        let mu = int(1) - lambda;
        Ok(Self::from_trusted(
            self.values.iter().zip(&other.values).map(|(a, b)| lambda * a + &mu * b).collect(),
        ))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.values.iter().map(format_rational).collect()
    }
}

/// A non-empty, sorted, duplicate-free set of domain indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subgroup {
    members: Vec<usize>,
}

impl Subgroup {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::precondition("subgroup is empty"));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::precondition("subgroup lists a point twice"));
        }
        Ok(Self { members })
    }

    pub fn full(n: usize) -> Self {
        Self { members: (0..n).collect() }
    }

    pub fn singleton(x: usize) -> Self {
        Self { members: vec![x] }
    }

    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(!members.is_empty() && members.windows(2).all(|w| w[0] < w[1]));
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn max_index(&self) -> usize {
        *self.members.last().expect("subgroups are non-empty")
    }

    /// Position of `x` within the member list.
    pub fn position(&self, x: usize) -> Option<usize> {
        self.members.binary_search(&x).ok()
    }

    pub fn intersect(&self, other: &Subgroup) -> Vec<usize> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.members[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|x| format!("x{}", x + 1)).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubgroupCollection {
    groups: Vec<Subgroup>,
}

impl SubgroupCollection {
    pub fn new(groups: Vec<Subgroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::precondition("subgroup collection is empty"));
        }
        let mut seen = BTreeSet::new();
        for g in &groups {
            if !seen.insert(g) {
                return Err(Error::precondition(format!("group {g} appears twice")));
            }
        }
        Ok(Self { groups })
    }

    pub fn from_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(lists.into_iter().map(Subgroup::new).collect::<Result<_>>()?)
    }

    pub fn groups(&self) -> &[Subgroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Subgroup> {
        self.groups.iter()
    }

    /// Points of `0..n` not in any group.
    pub fn uncovered(&self, n: usize) -> Vec<usize> {
        let mut hit = vec![false; n];
        for g in &self.groups {
            for &x in g.members() {
                if x < n {
                    hit[x] = true;
                }
            }
        }
        (0..n).filter(|&x| !hit[x]).collect()
    }

    pub fn covers(&self, n: usize) -> bool {
        self.uncovered(n).is_empty()
    }
}

/// Serialized, unvalidated form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceData {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(with = "rational::serde_str::vec")]
    pub marginal: Vec<Rational>,
    #[serde(with = "rational::serde_str::vec")]
    pub p_star: Vec<Rational>,
    #[serde(with = "rational::serde_str::vec")]
    pub f: Vec<Rational>,
    pub groups: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyDomain,
    Dimension { field: &'static str, expected: usize, actual: usize },
    NonPositiveMass { index: usize },
    MassNotOne { sum: String },
    OutOfUnitInterval { field: &'static str, index: usize, value: String },
    NoGroups,
    EmptyGroup { group: usize },
    IndexOutOfRange { group: usize, index: usize },
    DuplicateMember { group: usize, index: usize },
    DuplicateGroup { first: usize, second: usize },
    LabelCount { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDomain => write!(f, "domain is empty"),
            Violation::Dimension { field, expected, actual } => {
                write!(f, "{field} has {actual} entries, expected {expected}")
            }
            Violation::NonPositiveMass { index } => write!(f, "marginal mass at x{} is not positive", index + 1),
            Violation::MassNotOne { sum } => write!(f, "marginal sums to {sum}, not 1"),
            Violation::OutOfUnitInterval { field, index, value } => {
                write!(f, "{field}[{index}] = {value} lies outside [0,1]")
            }
            Violation::NoGroups => write!(f, "no groups given"),
            Violation::EmptyGroup { group } => write!(f, "group {group} is empty"),
            Violation::IndexOutOfRange { group, index } => {
                write!(f, "group {group} references point {index} outside the domain")
            }
            Violation::DuplicateMember { group, index } => {
                write!(f, "group {group} lists point {index} twice")
            }
            Violation::DuplicateGroup { first, second } => {
                write!(f, "groups {first} and {second} have identical members")
            }
            Violation::LabelCount { expected, actual } => {
                write!(f, "{actual} labels given for {expected} points")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub covers: bool,
    pub uncovered: Vec<usize>,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return write!(f, "valid (covers = {})", self.covers);
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every invariant of the instance types and reports all violations.
pub fn validate(data: &InstanceData) -> ValidationReport {
    let mut v = Vec::new();
    let n = data.n;
    if n == 0 {
        v.push(Violation::EmptyDomain);
    }
    if let Some(labels) = &data.labels {
        if labels.len() != n {
            v.push(Violation::LabelCount { expected: n, actual: labels.len() });
        }
    }
    if data.marginal.len() != n {
        v.push(Violation::Dimension { field: "marginal", expected: n, actual: data.marginal.len() });
    }
    for (i, p) in data.marginal.iter().enumerate() {
        if !p.is_positive() {
            v.push(Violation::NonPositiveMass { index: i });
        }
    }
    let sum: Rational = data.marginal.iter().sum();
    if !sum.is_one() {
        v.push(Violation::MassNotOne { sum: format_rational(&sum) });
    }
    for (field, vals) in [("p_star", &data.p_star), ("f", &data.f)] {
        if vals.len() != n {
            v.push(Violation::Dimension { field, expected: n, actual: vals.len() });
        }
        for (i, x) in vals.iter().enumerate() {
            if x.is_negative() || *x > int(1) {
                v.push(Violation::OutOfUnitInterval { field, index: i, value: format_rational(x) });
            }
        }
    }
    if data.groups.is_empty() {
        v.push(Violation::NoGroups);
    }
    let mut normalized: Vec<Vec<usize>> = Vec::new();
    for (gi, g) in data.groups.iter().enumerate() {
        if g.is_empty() {
            v.push(Violation::EmptyGroup { group: gi });
        }
        let mut sorted = g.clone();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                v.push(Violation::DuplicateMember { group: gi, index: w[0] });
            }
        }
        sorted.dedup();
        for &x in &sorted {
            if x >= n {
                v.push(Violation::IndexOutOfRange { group: gi, index: x });
            }
        }
        if let Some(first) = normalized.iter().position(|h| *h == sorted && !sorted.is_empty()) {
            v.push(Violation::DuplicateGroup { first, second: gi });
        }
        normalized.push(sorted);
    }
    let mut hit = vec![false; n];
    for g in &normalized {
        for &x in g {
            if x < n {
                hit[x] = true;
            }
        }
    }
    let uncovered: Vec<usize> = (0..n).filter(|&x| !hit[x]).collect();
    ValidationReport { valid: v.is_empty(), covers: uncovered.is_empty(), uncovered, violations: v }
}

/// A finite-domain audit problem: marginal, ground truth `p*`, subgroup
/// collection and the predictor `f` under audit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    domain: FiniteDomain,
    marginal: Marginal,
    ground_truth: PredictorVec,
    groups: SubgroupCollection,
    audited: PredictorVec,
}

impl Instance {
    pub fn new(data: InstanceData) -> Result<Self> {
        let report = validate(&data);
        if !report.valid {
            return Err(Error::InvalidInstance(report));
        }
        let domain = match data.labels {
            Some(l) => FiniteDomain::with_labels(l)?,
            None => FiniteDomain::new(data.n)?,
        };
        Ok(Self {
            domain,
            marginal: Marginal::new(data.marginal)?,
            ground_truth: PredictorVec::new(data.p_star)?,
            groups: SubgroupCollection::from_lists(data.groups)?,
            audited: PredictorVec::new(data.f)?,
        })
    }

    pub fn from_parts(
        marginal: Marginal,
        ground_truth: PredictorVec,
        groups: SubgroupCollection,
        audited: PredictorVec,
    ) -> Result<Self> {
        let n = marginal.len();
        check_dims(n, ground_truth.len())?;
        check_dims(n, audited.len())?;
        if let Some(g) = groups.iter().find(|g| g.max_index() >= n) {
            return Err(Error::precondition(format!("group {g} leaves the domain of size {n}")));
        }
        Ok(Self { domain: FiniteDomain::new(n)?, marginal, ground_truth, groups, audited })
    }

    /// Convenience constructor from raw vectors.
    pub fn build(
        marginal: Vec<Rational>,
        p_star: Vec<Rational>,
        f: Vec<Rational>,
        groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        Self::new(InstanceData { n: marginal.len(), labels: None, marginal, p_star, f, groups })
    }

    pub fn to_data(&self) -> InstanceData {
        InstanceData {
            n: self.n(),
            labels: self.domain.labels().map(|l| l.to_vec()),
            marginal: self.marginal.probs().to_vec(),
            p_star: self.ground_truth.values().to_vec(),
            f: self.audited.values().to_vec(),
            groups: self.groups.iter().map(|g| g.members().to_vec()).collect(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_data())
    }

    pub fn n(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &FiniteDomain {
        &self.domain
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn ground_truth(&self) -> &PredictorVec {
        &self.ground_truth
    }

    pub fn groups(&self) -> &SubgroupCollection {
        &self.groups
    }

    pub fn audited(&self) -> &PredictorVec {
        &self.audited
    }

    pub fn covers(&self) -> bool {
        self.groups.covers(self.n())
    }

    pub fn with_audited(&self, f: PredictorVec) -> Result<Self> {
        check_dims(self.n(), f.len())?;
        Ok(Self { audited: f, ..self.clone() })
    }

    pub fn with_ground_truth(&self, p: PredictorVec) -> Result<Self> {
        check_dims(self.n(), p.len())?;
        Ok(Self { ground_truth: p, ..self.clone() })
    }

    pub fn with_groups(&self, groups: SubgroupCollection) -> Result<Self> {
        Self::from_parts(self.marginal.clone(), self.ground_truth.clone(), groups, self.audited.clone())
            .map(|mut i| {
                i.domain = self.domain.clone();
                i
            })
    }

    /// The conditional instance `D|S` on the members of `s`, with the single group `S`.
    pub fn restrict(&self, s: &Subgroup) -> Result<Self> {
        let mass = group_mass(&self.marginal, s);
        let marginal =
            Marginal::new(s.members().iter().map(|&x| self.marginal.prob(x) / &mass).collect())?;
        let domain = match self.domain.labels() {
            Some(l) => FiniteDomain::with_labels(s.members().iter().map(|&x| l[x].clone()).collect())?,
            None => FiniteDomain::new(s.len())?,
        };
        Ok(Self {
            domain,
            marginal,
            ground_truth: self.ground_truth.restrict(s),
            groups: SubgroupCollection::new(vec![Subgroup::full(s.len())])?,
            audited: self.audited.restrict(s),
        })
    }
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// `sum_x m(x) |f(x) - g(x)|`.
pub fn l1_distance(f: &PredictorVec, g: &PredictorVec, m: &Marginal) -> Result<Rational> {
    check_dims(m.len(), f.len())?;
    check_dims(m.len(), g.len())?;
    Ok(l1_slices(f.values(), g.values(), m.probs()))
}

pub(crate) fn l1_slices(f: &[Rational], g: &[Rational], m: &[Rational]) -> Rational {
    f.iter()
        .zip(g)
        .zip(m)
        .filter(|((a, b), _)| a != b)
        .map(|((a, b), p)| p * (a - b).abs())
        .sum()
}

/// Conditional distance on `s`: `sum_{x in S} m(x)/m(S) |f(x) - g(x)|`.
///
/// `f` and `g` may be either full-domain vectors or restrictions to `s`.
pub fn conditional_l1(
    f: &PredictorVec,
    g: &PredictorVec,
    m: &Marginal,
    s: &Subgroup,
) -> Result<Rational> {
    let fs = restricted_view(f, s, m.len())?;
    let gs = restricted_view(g, s, m.len())?;
    let mass = group_mass(m, s);
    let weighted: Rational = s
        .members()
        .iter()
        .zip(fs.iter().zip(gs.iter()))
        .filter(|(_, (a, b))| a != b)
        .map(|(&x, (a, b))| m.prob(x) * (*a - *b).abs())
        .sum();
    Ok(weighted / mass)
}

/// Values of `f` on the members of `s`, accepting a full or already-restricted vector.
pub(crate) fn restricted_view<'a>(
    f: &'a PredictorVec,
    s: &Subgroup,
    n: usize,
) -> Result<Vec<&'a Rational>> {
    if f.len() == n {
        if s.max_index() >= n {
            return Err(Error::DimensionMismatch { expected: n, actual: s.max_index() + 1 });
        }
        Ok(s.members().iter().map(|&x| f.get(x)).collect())
    } else if f.len() == s.len() {
        Ok(f.values().iter().collect())
    } else {
        Err(Error::DimensionMismatch { expected: s.len(), actual: f.len() })
    }
}

/// `Pr[S] = sum_{x in S} m(x)`.
pub fn group_mass(m: &Marginal, s: &Subgroup) -> Rational {
    s.members().iter().map(|&x| m.prob(x)).fold(Rational::zero(), |acc, p| acc + p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn pv(v: &[(i64, i64)]) -> PredictorVec {
        PredictorVec::new(v.iter().map(|&(a, b)| q(a, b)).collect()).unwrap()
    }

    fn three_point_data() -> InstanceData {
        InstanceData {
            n: 3,
            labels: None,
            marginal: vec![q(1, 3); 3],
            p_star: vec![q(4, 5), q(1, 5), q(4, 5)],
            f: vec![q(1, 2); 3],
            groups: vec![vec![0, 1], vec![1, 2]],
        }
    }

    #[test]
    fn l1_matches_hand_values() {
        let m = Marginal::uniform(3).unwrap();
        let f = pv(&[(1, 2), (1, 2), (1, 2)]);
        assert!(l1_distance(&f, &f, &m).unwrap().is_zero());
        let g = pv(&[(4, 5), (1, 5), (4, 5)]);
        assert_eq!(l1_distance(&f, &g, &m).unwrap(), q(3, 10));

        let m4 = Marginal::uniform(4).unwrap();
        let f4 = pv(&[(3, 10), (1, 2), (1, 2), (4, 5)]);
        let p4 = pv(&[(3, 10), (1, 5), (4, 5), (4, 5)]);
        assert_eq!(l1_distance(&f4, &p4, &m4).unwrap(), q(3, 20));
    }

    #[test]
    fn l1_rejects_dimension_mismatch() {
        let m = Marginal::uniform(3).unwrap();
        let f = pv(&[(1, 2), (1, 2)]);
        assert!(matches!(l1_distance(&f, &f, &m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn conditional_l1_on_first_group() {
        let m = Marginal::uniform(3).unwrap();
        let s1 = Subgroup::new(vec![0, 1]).unwrap();
        let f = pv(&[(1, 2), (1, 2), (1, 2)]);
        let g = pv(&[(4, 5), (1, 5)]);
        assert_eq!(conditional_l1(&f, &g, &m, &s1).unwrap(), q(3, 10));
        let c = pv(&[(1, 2), (1, 2)]);
        assert!(conditional_l1(&f, &c, &m, &s1).unwrap().is_zero());
        assert!(conditional_l1(&f, &f, &m, &s1).unwrap().is_zero());
    }

    #[test]
    fn group_masses() {
        let m = Marginal::uniform(3).unwrap();
        assert_eq!(group_mass(&m, &Subgroup::full(3)), int(1));
        assert_eq!(group_mass(&m, &Subgroup::new(vec![0, 2]).unwrap()), q(2, 3));
    }

    #[test]
    fn validate_reports_cover_and_violations() {
        let ok = validate(&three_point_data());
        assert!(ok.valid && ok.covers);

        let mut bad = three_point_data();
        bad.marginal = vec![q(3, 10); 3];
        let r = validate(&bad);
        assert!(!r.valid);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::MassNotOne { .. })));

        let mut partial = three_point_data();
        partial.groups = vec![vec![0, 1]];
        let r = validate(&partial);
        assert!(r.valid && !r.covers);
        assert_eq!(r.uncovered, vec![2]);

        let mut messy = three_point_data();
        messy.groups = vec![vec![1, 0], vec![0, 1], vec![4], vec![]];
        messy.f[1] = q(3, 2);
        messy.marginal[0] = int(0);
        let r = validate(&messy);
        assert!(!r.valid);
        let kinds: Vec<_> = r.violations.iter().map(|v| v.to_string()).collect();
        assert!(kinds.iter().any(|s| s.contains("identical members")), "{kinds:?}");
        assert!(kinds.iter().any(|s| s.contains("outside the domain")), "{kinds:?}");
        assert!(kinds.iter().any(|s| s.contains("is empty")), "{kinds:?}");
        assert!(kinds.iter().any(|s| s.contains("f[1]")), "{kinds:?}");
        assert!(kinds.iter().any(|s| s.contains("not positive")), "{kinds:?}");
    }

    #[test]
    fn restriction_renormalizes() {
        let inst = Instance::new(three_point_data()).unwrap();
        let s2 = Subgroup::new(vec![1, 2]).unwrap();
        let r = inst.restrict(&s2).unwrap();
        assert_eq!(r.n(), 2);
        assert_eq!(r.marginal().probs(), &[q(1, 2), q(1, 2)]);
        assert_eq!(r.ground_truth().values(), &[q(1, 5), q(4, 5)]);
    }

    #[test]
    fn constructors_enforce_invariants() {
        assert!(Marginal::new(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(Marginal::new(vec![int(0), int(1)]).is_err());
        assert!(PredictorVec::new(vec![q(-1, 2)]).is_err());
        assert!(Subgroup::new(vec![]).is_err());
        assert!(Subgroup::new(vec![1, 1]).is_err());
        let g = Subgroup::new(vec![2, 0]).unwrap();
        assert_eq!(g.members(), &[0, 2]);
        assert!(SubgroupCollection::from_lists(vec![vec![0], vec![0]]).is_err());
        assert!(SubgroupCollection::new(vec![]).is_err());
    }
}
