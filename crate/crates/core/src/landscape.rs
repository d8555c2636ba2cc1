//! Random perturbation probes around a predictor.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::distances::{dimc_from_cells, generated_partition, nearest_calibrated, nearest_multicalibrated, worst_of};
use crate::domain::{group_mass, Instance, PredictorVec};
use crate::enumerate::{calibrated_set_with, multicalibrated_set_with, CalibratedSet, MulticalibratedSet};
use crate::error::{Error, Result};
use crate::multiaccuracy::{dma_of, wdma_of};
use crate::rational::{int, q, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Wdmc,
    Dmc,
    Dimc,
    Wdma,
    Dma,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Wdmc, Metric::Dmc, Metric::Dimc, Metric::Wdma, Metric::Dma];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Wdmc => "wdmc",
            Metric::Dmc => "dmc",
            Metric::Dimc => "dimc",
            Metric::Wdma => "wdma",
            Metric::Dma => "dma",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::precondition(format!("unknown metric {s:?}")))
    }
}

/// A metric as a function of the audited predictor, with the perfect sets
/// (which depend only on `p*` and the groups) computed once.
pub struct MetricEvaluator<'a> {
    inst: &'a Instance,
    kind: Prepared,
}

enum Prepared {
    Wdmc(Vec<CalibratedSet>),
    Dmc(MulticalibratedSet),
    Dimc(Vec<CalibratedSet>),
    Wdma,
    Dma,
}

impl<'a> MetricEvaluator<'a> {
    pub fn new(metric: Metric, inst: &'a Instance, budget: &Budget) -> Result<Self> {
        let kind = match metric {
            Metric::Wdmc => Prepared::Wdmc(
                inst.groups().iter().map(|s| calibrated_set_with(inst, s, budget)).collect::<Result<_>>()?,
            ),
            Metric::Dmc => Prepared::Dmc(multicalibrated_set_with(inst, budget)?),
            Metric::Dimc => {
                let part = generated_partition(inst.groups(), inst.n())?;
                Prepared::Dimc(part.cells.iter().map(|c| calibrated_set_with(inst, c, budget)).collect::<Result<_>>()?)
            }
            Metric::Wdma => Prepared::Wdma,
            Metric::Dma => Prepared::Dma,
        };
        Ok(Self { inst, kind })
    }

    pub fn eval(&self, f: &PredictorVec) -> Result<Rational> {
        let inst = self.inst;
        match &self.kind {
            Prepared::Wdmc(cals) => {
                let per = cals
                    .iter()
                    .map(|c| Ok(group_mass(inst.marginal(), &c.subgroup) * nearest_calibrated(inst, f, c)?.value))
                    .collect::<Result<Vec<_>>>()?;
                Ok(worst_of(per).value)
            }
            Prepared::Dmc(set) => Ok(nearest_multicalibrated(inst, f, set)?.value),
            Prepared::Dimc(cells) => Ok(dimc_from_cells(inst, f, cells)?.value),
            Prepared::Wdma => Ok(wdma_of(inst, f)?.value),
            Prepared::Dma => Ok(dma_of(inst, f)?.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub metric: Metric,
    pub radius: Rational,
    pub trials: usize,
    pub base: Rational,
    /// Smallest value seen, never above `base`.
    pub best: Rational,
    pub decrease: Rational,
    /// Trial index, perturbed predictor and perturbation achieving `best`, when it beats `base`.
    pub witness: Option<(usize, PredictorVec, Vec<Rational>)>,
}

impl ProbeReport {
    pub fn found_decrease(&self) -> bool {
        self.decrease.is_positive()
    }
}

/// Resolution of the random Dirichlet weights and radius fractions.
const WEIGHT_SCALE: f64 = 1e6;
const RADIUS_STEPS: i64 = 1000;

/// A random perturbation with `sum_x m(x)|v(x)| <= radius`: symmetric
/// Dirichlet magnitudes with random signs, scaled by a random fraction of the
/// radius. Clipping to `[0,1]` only shrinks it.
pub fn random_perturbation(inst: &Instance, radius: &Rational, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let n = inst.n();
    let weights: Vec<i64> = (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (-u.ln() * WEIGHT_SCALE).floor() as i64 + 1
        })
        .collect();
    let total: i64 = weights.iter().sum();
    let r = radius * q(rng.random_range(1..=RADIUS_STEPS), RADIUS_STEPS);
    (0..n)
        .map(|x| {
            let mag = &r * q(weights[x], total) / inst.marginal().prob(x);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

pub fn local_min_probe(metric: Metric, inst: &Instance, radius: &Rational, trials: usize, seed: u64) -> Result<ProbeReport> {
    local_min_probe_with(metric, inst, radius, trials, seed, &Budget::default())
}

/// Samples `trials` perturbations of the audited predictor and reports the
/// largest decrease of `metric` among them. Deterministic in `seed`.
pub fn local_min_probe_with(
    metric: Metric,
    inst: &Instance,
    radius: &Rational,
    trials: usize,
    seed: u64,
    budget: &Budget,
) -> Result<ProbeReport> {
    if trials == 0 {
        return Err(Error::precondition("at least one trial is required"));
    }
    if radius.is_negative() {
        return Err(Error::precondition("radius must be nonnegative"));
    }
    let eval = MetricEvaluator::new(metric, inst, budget)?;
    let f = inst.audited();
    let base = eval.eval(f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = base.clone();
    let mut witness = None;
    for t in 0..trials {
        let v = random_perturbation(inst, radius, &mut rng);
        let moved: Vec<Rational> =
            f.values().iter().zip(&v).map(|(a, b)| (a + b).clamp(int(0), int(1))).collect();
        let applied: Vec<Rational> = moved.iter().zip(f.values()).map(|(a, b)| a - b).collect();
        let g = PredictorVec::new(moved)?;
        let val = eval.eval(&g)?;
        if val < best {
            best = val;
            witness = Some((t, g, applied));
        }
    }
    let decrease = &base - &best;
    debug_assert!(!decrease.is_negative() && (witness.is_some() || decrease.is_zero()));
    Ok(ProbeReport { metric, radius: radius.clone(), trials, base, best, decrease, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_wdmc_local_min;

    #[test]
    fn perturbations_stay_in_the_ball() {
        let inst = gen_wdmc_local_min(&q(1, 200), &q(1, 10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let radius = q(1, 100);
        for _ in 0..50 {
            let v = random_perturbation(&inst, &radius, &mut rng);
            let norm: Rational = v.iter().zip(inst.marginal().probs()).map(|(a, m)| a.abs() * m).sum();
            assert!(norm <= radius);
        }
    }

    #[test]
    fn ground_truth_has_nothing_to_improve() {
        let inst = gen_wdmc_local_min(&q(1, 200), &q(1, 10)).unwrap();
        let at_truth = inst.with_audited(inst.ground_truth().clone()).unwrap();
        for m in Metric::ALL {
            let r = local_min_probe(m, &at_truth, &q(1, 100), 20, 1).unwrap();
            assert!(r.base.is_zero() && !r.found_decrease(), "{m}");
        }
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("DIMC".parse::<Metric>().unwrap(), Metric::Dimc);
        assert!("ece".parse::<Metric>().is_err());
    }
}
