//! Exact rational linear programming: two-phase dense-tableau simplex with Bland's rule.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{serde_str, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "serde_str::vec")]
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    #[serde(with = "serde_str")]
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound(#[serde(with = "serde_str")] pub Rational);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    #[serde(with = "serde_str::vec")]
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    /// `None` means unbounded below.
    pub lower: Vec<Option<Bound>>,
    pub upper: Vec<Option<Bound>>,
}

impl LpProblem {
    /// `n` variables, each with lower bound 0 and no upper bound, zero objective.
    pub fn new(sense: Sense, n: usize) -> Self {
        Self {
            sense,
            objective: vec![Rational::zero(); n],
            constraints: Vec::new(),
            lower: vec![Some(Bound(Rational::zero())); n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[j] = lower.map(Bound);
        self.upper[j] = upper.map(Bound);
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Adds `sum_j c_j x_j  rel  rhs` from sparse `(index, coefficient)` terms.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add(coeffs, relation, rhs);
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: self.lower.len().min(self.upper.len()) });
        }
        if let Some(c) = self.constraints.iter().find(|c| c.coeffs.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: c.coeffs.len() });
        }
        Ok(())
    }

    /// Objective value and feasibility of `x`, both exact.
    pub fn evaluate(&self, x: &[Rational]) -> (Rational, bool) {
        let dot = |a: &[Rational]| -> Rational { a.iter().zip(x).map(|(a, b)| a * b).sum() };
        let rows_ok = self.constraints.iter().all(|c| {
            let lhs = dot(&c.coeffs);
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        });
        let bounds_ok = x.iter().enumerate().all(|(j, v)| {
            self.lower[j].as_ref().is_none_or(|b| *v >= b.0) && self.upper[j].as_ref().is_none_or(|b| *v <= b.0)
        });
        (dot(&self.objective), rows_ok && bounds_ok && x.len() == self.num_vars())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value; zero unless `status` is optimal.
    pub optimum: Rational,
    /// Optimal point, or for an unbounded problem a feasible point.
    pub assignment: Vec<Rational>,
    /// For an unbounded problem, a direction along which the objective improves without bound.
    pub ray: Option<Vec<Rational>>,
}

impl LpSolution {
    pub fn into_optimal(self) -> Result<(Rational, Vec<Rational>)> {
        match self.status {
            LpStatus::Optimal => Ok((self.optimum, self.assignment)),
            LpStatus::Infeasible => Err(Error::Lp("infeasible".into())),
            LpStatus::Unbounded => Err(Error::Lp("unbounded".into())),
        }
    }
}

/// Each original variable is `offset + sum(sign * y)` over nonnegative columns `y`.
struct VarMap {
    offset: Rational,
    cols: Vec<(usize, bool)>,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    cost: Vec<Rational>,
    // cost[j] - c_B B^-1 A_j
    reduced: Vec<Rational>,
}

impl Tableau {
    fn price(&mut self) {
        self.reduced = self.cost.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &self.cost[b];
            if cb.is_zero() {
                continue;
            }
            for (r, a) in self.reduced.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *r -= cb * a;
                }
            }
        }
    }

    fn objective(&self) -> Rational {
        self.basis.iter().zip(&self.rhs).map(|(&b, v)| &self.cost[b] * v).sum()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a /= &piv;
                }
            }
            self.rhs[r] /= &piv;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let factor = self.rows[i][c].clone();
            for (a, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *a -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &prhs;
        }
        let factor = self.reduced[c].clone();
        if !factor.is_zero() {
            for (a, p) in self.reduced.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *a -= &factor * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes over the columns allowed by `active`. Returns the entering
    /// column that proved unboundedness, if any.
    fn run(&mut self, active: &[bool]) -> Option<usize> {
        loop {
            // Bland: lowest-index improving column, then lowest-index basic variable among ratio ties.
            let c = (0..self.reduced.len()).find(|&j| active[j] && self.reduced[j].is_negative())?;
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Some(c),
            }
        }
    }

    fn column_values(&self, ncols: usize) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < ncols {
                y[b] = self.rhs[i].clone();
            }
        }
        y
    }
}

/// Solves `p` exactly. Non-optimal outcomes are reported in the status.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    p.check()?;
    let n = p.num_vars();

    // Substitute bounded/free variables by nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut extra_rows: Vec<(Vec<(usize, Rational)>, Rational)> = Vec::new();
    for j in 0..n {
        let lo = p.lower[j].as_ref().map(|b| &b.0);
        let hi = p.upper[j].as_ref().map(|b| &b.0);
        match (lo, hi) {
            (Some(l), hi) => {
                maps.push(VarMap { offset: l.clone(), cols: vec![(ncols, true)] });
                if let Some(u) = hi {
                    extra_rows.push((vec![(ncols, Rational::one())], u - l));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), cols: vec![(ncols, false)] });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap { offset: Rational::zero(), cols: vec![(ncols, true), (ncols + 1, false)] });
                ncols += 2;
            }
        }
    }
    if extra_rows.iter().any(|(_, rhs)| rhs.is_negative()) {
        return Ok(infeasible(n));
    }

    // Rows over the y columns, rhs made nonnegative.
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &p.constraints {
        let mut a = vec![Rational::zero(); ncols];
        let mut rhs = c.rhs.clone();
        for (j, coef) in c.coeffs.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            rhs -= coef * &maps[j].offset;
            for &(col, plus) in &maps[j].cols {
                if plus {
                    a[col] += coef;
                } else {
                    a[col] -= coef;
                }
            }
        }
        rows.push((a, c.relation, rhs));
    }
    for (terms, rhs) in extra_rows {
        let mut a = vec![Rational::zero(); ncols];
        for (col, v) in terms {
            a[col] = v;
        }
        rows.push((a, Relation::Le, rhs));
    }
    for (a, rel, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for v in a.iter_mut() {
                *v = -v.clone();
            }
            *rhs = -rhs.clone();
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Columns: y (ncols), one slack/surplus per inequality, one artificial per Eq/Ge row.
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = ncols + n_slack + n_art;
    let art_start = ncols + n_slack;
    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cost: vec![Rational::zero(); total],
        reduced: Vec::new(),
    };
    let (mut s_idx, mut a_idx) = (ncols, art_start);
    for (a, rel, rhs) in rows {
        let mut row = a;
        row.resize(total, Rational::zero());
        match rel {
            Relation::Le => {
                row[s_idx] = Rational::one();
                t.basis.push(s_idx);
                s_idx += 1;
            }
            Relation::Ge => {
                row[s_idx] = -Rational::one();
                s_idx += 1;
                row[a_idx] = Rational::one();
                t.basis.push(a_idx);
                a_idx += 1;
            }
            Relation::Eq => {
                row[a_idx] = Rational::one();
                t.basis.push(a_idx);
                a_idx += 1;
            }
        }
        t.rows.push(row);
        t.rhs.push(rhs);
    }

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        for c in t.cost[art_start..].iter_mut() {
            *c = Rational::one();
        }
        t.price();
        let all = vec![true; total];
        t.run(&all);
        if t.objective().is_positive() {
            return Ok(infeasible(n));
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2 over the original objective, expressed in y.
    let flip = p.sense == Sense::Maximize;
    t.cost = vec![Rational::zero(); total];
    for (j, c) in p.objective.iter().enumerate() {
        for &(col, plus) in &maps[j].cols {
            let v = if plus == flip { -c.clone() } else { c.clone() };
            t.cost[col] += v;
        }
    }
    t.price();
    let active: Vec<bool> = (0..total).map(|j| j < art_start).collect();
    let unbounded_col = t.run(&active);

    let y = t.column_values(ncols);
    let to_x = |y: &[Rational], with_offset: bool| -> Vec<Rational> {
        maps.iter()
            .map(|vm| {
                let mut v = if with_offset { vm.offset.clone() } else { Rational::zero() };
                for &(col, plus) in &vm.cols {
                    if plus {
                        v += &y[col];
                    } else {
                        v -= &y[col];
                    }
                }
                v
            })
            .collect()
    };
    let assignment = to_x(&y, true);
    if let Some(c) = unbounded_col {
        let mut d = vec![Rational::zero(); total];
        d[c] = Rational::one();
        for (i, &b) in t.basis.iter().enumerate() {
            d[b] = -t.rows[i][c].clone();
        }
        let ray = to_x(&d[..ncols], false);
        return Ok(LpSolution { status: LpStatus::Unbounded, optimum: Rational::zero(), assignment, ray: Some(ray) });
    }
    let optimum: Rational = p.objective.iter().zip(&assignment).map(|(c, x)| c * x).sum();
    Ok(LpSolution { status: LpStatus::Optimal, optimum, assignment, ray: None })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        optimum: Rational::zero(),
        assignment: vec![Rational::zero(); n],
        ray: None,
    }
}
