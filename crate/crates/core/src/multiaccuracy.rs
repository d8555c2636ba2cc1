//! Bias, worst-group bias and the distance to multiaccuracy.

use num_traits::{Signed, Zero};

use crate::distances::{worst_of, DistanceResult, WorstGroup};
use crate::domain::{group_mass, restricted_view, Instance, PredictorVec, Subgroup};
use crate::error::Result;
use crate::lp::{lp_solve, LpProblem, Relation, Sense};
use crate::rational::{int, Rational};

/// `E_{D|S}[p*(x) - f(x)]`. `f` may be full-length or restricted to `S`.
pub fn signed_bias(f: &PredictorVec, inst: &Instance, s: &Subgroup) -> Result<Rational> {
    let fs = restricted_view(f, s, inst.n())?;
    let m = inst.marginal();
    let p = inst.ground_truth();
    let total: Rational = s.members().iter().zip(fs).map(|(&x, v)| m.prob(x) * (p.get(x) - v)).sum();
    Ok(total / group_mass(m, s))
}

/// `|E_{D|S}[p*(x) - f(x)]|`.
pub fn bias(f: &PredictorVec, inst: &Instance, s: &Subgroup) -> Result<Rational> {
    Ok(signed_bias(f, inst, s)?.abs())
}

/// `max_S Pr[S] * bias_S(f)` for the audited predictor.
pub fn wdma(inst: &Instance) -> Result<WorstGroup> {
    wdma_of(inst, inst.audited())
}

pub(crate) fn wdma_of(inst: &Instance, f: &PredictorVec) -> Result<WorstGroup> {
    let per = inst
        .groups()
        .iter()
        .map(|s| Ok(group_mass(inst.marginal(), s) * bias(f, inst, s)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst_of(per))
}

/// The program `min sum m(x) t(x)` over `g in [0,1]^n`, `t >= |g - f|`, with
/// `sum_{x in S} m(x) g(x) = sum_{x in S} m(x) p*(x)` for every group.
/// Variables are `g` at `0..n` and `t` at `n..2n`.
pub fn dma_problem(inst: &Instance, f: &PredictorVec) -> LpProblem {
    let n = inst.n();
    let m = inst.marginal();
    let p = inst.ground_truth();
    let mut lp = LpProblem::new(Sense::Minimize, 2 * n);
    for x in 0..n {
        lp.objective[n + x] = m.prob(x).clone();
        lp.set_bounds(x, Some(int(0)), Some(int(1)));
    }
    for s in inst.groups().iter() {
        let terms: Vec<(usize, Rational)> = s.members().iter().map(|&x| (x, m.prob(x).clone())).collect();
        let rhs: Rational = s.members().iter().map(|&x| m.prob(x) * p.get(x)).sum();
        lp.add_sparse(&terms, Relation::Eq, rhs);
    }
    for x in 0..n {
        lp.add_sparse(&[(n + x, int(1)), (x, int(-1))], Relation::Ge, -f.get(x).clone());
        lp.add_sparse(&[(n + x, int(1)), (x, int(1))], Relation::Ge, f.get(x).clone());
    }
    lp
}

/// Distance from the audited predictor to the multiaccurate predictors, by exact LP.
pub fn dma(inst: &Instance) -> Result<DistanceResult> {
    dma_of(inst, inst.audited())
}

pub(crate) fn dma_of(inst: &Instance, f: &PredictorVec) -> Result<DistanceResult> {
    let n = inst.n();
    let (value, x) = lp_solve(&dma_problem(inst, f))?.into_optimal()?;
    let witness = PredictorVec::from_trusted(x[..n].to_vec());
    Ok(DistanceResult { value, witness })
}

/// Nearest point of `acc(D|S)` to `f|S`: shrink `f` toward `p*` on the side
/// that overshoots. The distance equals the bias; the witness is restricted to `S`.
pub fn acc_projection(f: &PredictorVec, inst: &Instance, s: &Subgroup) -> Result<DistanceResult> {
    let fs: Vec<Rational> = restricted_view(f, s, inst.n())?.into_iter().cloned().collect();
    let ps: Vec<&Rational> = s.members().iter().map(|&x| inst.ground_truth().get(x)).collect();
    let ms: Vec<&Rational> = s.members().iter().map(|&x| inst.marginal().prob(x)).collect();
    let delta = -signed_bias(f, inst, s)?;
    if delta.is_zero() {
        return Ok(DistanceResult { value: delta, witness: PredictorVec::from_trusted(fs) });
    }
    // Over: mass of |f - p*| where f - p* has the sign of delta; under: the rest.
    let (mut over, mut under) = (Rational::zero(), Rational::zero());
    for ((fv, pv), mv) in fs.iter().zip(&ps).zip(&ms) {
        let d = fv - *pv;
        if d.is_zero() {
            continue;
        }
        if d.is_positive() == delta.is_positive() {
            over += *mv * d.abs();
        } else {
            under += *mv * d.abs();
        }
    }
    let t = &under / &over;
    let witness: Vec<Rational> = fs
        .iter()
        .zip(&ps)
        .map(|(fv, pv)| {
            let d = fv - *pv;
            if !d.is_zero() && d.is_positive() == delta.is_positive() {
                &t * fv + (int(1) - &t) * *pv
            } else {
                fv.clone()
            }
        })
        .collect();
    Ok(DistanceResult { value: delta.abs(), witness: PredictorVec::from_trusted(witness) })
}
