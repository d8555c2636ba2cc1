//! Sampling-based interval estimates of dCE and dIMC.
//!
//! Draws use SplitMix64. A point is chosen as the first index whose
//! cumulative mass, floored to a multiple of `2^-64`, exceeds a uniform `u64`;
//! a label is 1 iff a second `u64` falls below `floor(p*(x) * 2^64)`. Batch
//! `j` of a run seeded with `s` uses the stream `derive_seed(s, j)`, so
//! batches are independent of how they are scheduled.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::distances::generated_partition;
use crate::domain::{group_mass, Instance, Subgroup};
use crate::error::{Error, Result};
use crate::lp::{lp_solve, LpProblem, Relation, Sense};
use crate::rational::{int, render_decimal, to_f64, Rational, SqrtSum};

/// Constants of the median-of-means schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Batch size is `ceil(size_factor / eps^2)`.
    pub size_factor: u64,
    /// Batch count is `ceil(count_factor * ln(1/delta))`.
    pub count_factor: u64,
    /// Per-cell accuracy in the dIMC estimator is `eps / cell_eps_divisor`.
    pub cell_eps_divisor: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { size_factor: 4, count_factor: 18, cell_eps_divisor: 1 }
    }
}

fn check_unit_open(name: &str, v: &Rational) -> Result<()> {
    if v.is_positive() && *v < int(1) {
        Ok(())
    } else {
        Err(Error::precondition(format!("{name} must lie in (0,1)")))
    }
}

impl EstimatorConfig {
    pub fn batch_size(&self, eps: &Rational) -> u64 {
        let r = Rational::from_integer(BigInt::from(self.size_factor)) / (eps * eps);
        r.ceil().to_integer().to_u64().unwrap_or(u64::MAX).max(1)
    }

    pub fn batch_count(&self, delta: &Rational) -> u64 {
        let ln = (int(1) / delta).to_f64().unwrap_or(f64::INFINITY).ln();
        ((self.count_factor as f64 * ln).ceil() as u64).max(1)
    }
}

pub fn batch_size(eps: &Rational) -> u64 {
    EstimatorConfig::default().batch_size(eps)
}

pub fn batch_count(delta: &Rational) -> u64 {
    EstimatorConfig::default().batch_count(delta)
}

/// Seed of stream `stream` under master seed `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    SplitMix64::seed_from_u64(master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}

const TWO_64: u128 = 1 << 64;

fn scaled_floor(r: &Rational) -> u128 {
    let v = (r * Rational::from_integer(BigInt::from(TWO_64))).floor().to_integer();
    v.to_u128().unwrap_or(0).min(TWO_64)
}

/// Draws points and labels from a distribution over `points`.
#[derive(Clone, Debug)]
pub struct Sampler {
    points: Vec<usize>,
    cdf: Vec<u128>,
    label_cut: Vec<u128>,
}

impl Sampler {
    /// `D` itself.
    pub fn new(inst: &Instance) -> Self {
        Self::over(inst, &Subgroup::full(inst.n()))
    }

    /// `D|S`.
    pub fn over(inst: &Instance, s: &Subgroup) -> Self {
        let mass = group_mass(inst.marginal(), s);
        let mut acc = Rational::zero();
        let mut cdf = Vec::with_capacity(s.len());
        for &x in s.members() {
            acc += inst.marginal().prob(x);
            cdf.push(scaled_floor(&(&acc / &mass)));
        }
        *cdf.last_mut().expect("subgroups are non-empty") = TWO_64;
        let label_cut = s.members().iter().map(|&x| scaled_floor(inst.ground_truth().get(x))).collect();
        Self { points: s.members().to_vec(), cdf, label_cut }
    }

    /// Position within the support and label of one draw.
    #[inline]
    pub fn draw_local(&self, rng: &mut SplitMix64) -> (usize, bool) {
        let u = rng.next_u64() as u128;
        let i = self.cdf.partition_point(|&c| c <= u);
        let y = (rng.next_u64() as u128) < self.label_cut[i];
        (i, y)
    }

    pub fn draw(&self, rng: &mut SplitMix64) -> (usize, bool) {
        let (i, y) = self.draw_local(rng);
        (self.points[i], y)
    }

    pub fn support(&self) -> &[usize] {
        &self.points
    }
}

/// `m` i.i.d. draws `(x, y)` from `D`.
pub fn sample(inst: &Instance, m: usize, seed: u64) -> Vec<(usize, bool)> {
    let s = Sampler::new(inst);
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..m).map(|_| s.draw(&mut rng)).collect()
}

/// `m` i.i.d. draws from `D|S`.
pub fn sample_conditional(inst: &Instance, s: &Subgroup, m: usize, seed: u64) -> Vec<(usize, bool)> {
    let sm = Sampler::over(inst, s);
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..m).map(|_| sm.draw(&mut rng)).collect()
}

/// One observation as seen by an auditor: prediction, label and membership in each group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSample {
    pub prediction: Rational,
    pub label: bool,
    pub group_bits: Vec<bool>,
}

pub fn sample_labeled(inst: &Instance, m: usize, seed: u64) -> Vec<LabeledSample> {
    sample(inst, m, seed)
        .into_iter()
        .map(|(x, label)| LabeledSample {
            prediction: inst.audited().get(x).clone(),
            label,
            group_bits: inst.groups().iter().map(|g| g.contains(x)).collect(),
        })
        .collect()
}

/// Per-value tallies: `(v, count, ones)`, `v` strictly increasing.
pub type ValueCounts = Vec<(Rational, u64, u64)>;

/// Empirical lower distance to calibration: the largest correlation
/// `(1/m) sum_j w(v_j)(y_j - v_j)` over 1-Lipschitz `w` into `[-1,1]`.
pub fn smce_empirical(samples: &[(Rational, bool)]) -> Result<Rational> {
    if samples.is_empty() {
        return Err(Error::precondition("at least one sample is required"));
    }
    let mut sorted: Vec<&(Rational, bool)> = samples.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut counts: ValueCounts = Vec::new();
    for (v, y) in sorted {
        match counts.last_mut() {
            Some((last, n, ones)) if last == v => {
                *n += 1;
                *ones += *y as u64;
            }
            _ => counts.push((v.clone(), 1, *y as u64)),
        }
    }
    smce_from_counts(&counts)
}

pub fn smce_from_counts(counts: &ValueCounts) -> Result<Rational> {
    let a = counts.len();
    let m: u64 = counts.iter().map(|c| c.1).sum();
    if m == 0 {
        return Err(Error::precondition("at least one sample is required"));
    }
    let mut lp = LpProblem::new(Sense::Maximize, a);
    for (j, (v, n, ones)) in counts.iter().enumerate() {
        lp.objective[j] = Rational::from_integer(BigInt::from(*ones)) - v * Rational::from_integer(BigInt::from(*n));
        lp.set_bounds(j, Some(int(-1)), Some(int(1)));
    }
    for j in 0..a.saturating_sub(1) {
        let gap = &counts[j + 1].0 - &counts[j].0;
        lp.add_sparse(&[(j, int(1)), (j + 1, int(-1))], Relation::Le, gap.clone());
        lp.add_sparse(&[(j + 1, int(1)), (j, int(-1))], Relation::Le, gap);
    }
    let (opt, _) = lp_solve(&lp)?.into_optimal()?;
    Ok(opt / Rational::from_integer(BigInt::from(m)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalEstimate {
    pub point: Rational,
    pub lower: Rational,
    pub upper: SqrtSum,
    pub confidence: Rational,
    pub samples_used: u64,
}

impl IntervalEstimate {
    pub fn contains(&self, x: &Rational) -> bool {
        self.lower <= *x && self.upper.ge_rational(x)
    }

    pub fn upper_decimal(&self) -> String {
        self.upper.render()
    }

    pub fn to_report(&self) -> IntervalReport {
        IntervalReport {
            point: render_decimal(&self.point),
            lower: render_decimal(&self.lower),
            upper: self.upper.render(),
            upper_expression: self.upper.expression(),
            confidence: render_decimal(&self.confidence),
            samples_used: self.samples_used,
        }
    }
}

/// Decimal view of an [`IntervalEstimate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalReport {
    pub point: String,
    pub lower: String,
    pub upper: String,
    pub upper_expression: String,
    pub confidence: String,
    pub samples_used: u64,
}

/// Lower median, so an even number of batches never averages.
fn lower_median(mut v: Vec<Rational>) -> Rational {
    v.sort();
    v.swap_remove((v.len() - 1) / 2)
}

/// Distinct predictions on `points`, and for each point the index of its value.
fn value_index(inst: &Instance, points: &[usize]) -> (Vec<Rational>, Vec<usize>) {
    let mut vals: Vec<Rational> = points.iter().map(|&x| inst.audited().get(x).clone()).collect();
    vals.sort();
    vals.dedup();
    let idx = points.iter().map(|&x| vals.binary_search(inst.audited().get(x)).expect("value present")).collect();
    (vals, idx)
}

fn counts_of(vals: &[Rational], tallies: &[(u64, u64)]) -> ValueCounts {
    vals.iter()
        .zip(tallies)
        .filter(|(_, t)| t.0 > 0)
        .map(|(v, t)| (v.clone(), t.0, t.1))
        .collect()
}

pub fn dce_interval(inst: &Instance, s: &Subgroup, eps: &Rational, delta: &Rational, seed: u64) -> Result<IntervalEstimate> {
    dce_interval_with(inst, s, eps, delta, seed, &EstimatorConfig::default())
}

/// Median over batches of the empirical lower dCE on `D|S`, widened to
/// `[mu - eps, 4 sqrt(mu + eps)]`.
pub fn dce_interval_with(
    inst: &Instance,
    s: &Subgroup,
    eps: &Rational,
    delta: &Rational,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<IntervalEstimate> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let size = cfg.batch_size(eps);
    let count = cfg.batch_count(delta);
    let sampler = Sampler::over(inst, s);
    let (vals, idx) = value_index(inst, s.members());
    let mut estimates = Vec::with_capacity(count as usize);
    for b in 0..count {
        let mut rng = SplitMix64::seed_from_u64(derive_seed(seed, b));
        let mut tallies = vec![(0u64, 0u64); vals.len()];
        for _ in 0..size {
            let (i, y) = sampler.draw_local(&mut rng);
            let t = &mut tallies[idx[i]];
            t.0 += 1;
            t.1 += y as u64;
        }
        estimates.push(smce_from_counts(&counts_of(&vals, &tallies))?);
    }
    let mu = lower_median(estimates);
    Ok(IntervalEstimate {
        lower: &mu - eps,
        upper: SqrtSum { coef: int(4), a: &mu + eps, b: Rational::zero() },
        point: mu,
        confidence: int(1) - delta,
        samples_used: size * count,
    })
}

pub fn dimc_interval(inst: &Instance, eps: &Rational, delta: &Rational, seed: u64) -> Result<IntervalEstimate> {
    dimc_interval_with(inst, eps, delta, seed, &EstimatorConfig::default())
}

/// Draws enough samples from `D` that every cell of `J(C)` receives
/// `w = batch_size(eps') * batch_count(delta/l)` of them with high probability,
/// estimates each cell's lower dCE by median of batches and its mass by
/// frequency, and returns `[theta - eps, 4 sqrt(l theta) + sqrt(eps)]` with
/// `theta = sum_i p_i mu_i`.
///
/// A cell that falls short of `w` samples splits what it received into the
/// same number of batches.
pub fn dimc_interval_with(
    inst: &Instance,
    eps: &Rational,
    delta: &Rational,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<IntervalEstimate> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let part = generated_partition(inst.groups(), inst.n())?;
    let l = part.len();
    let masses: Vec<Rational> = part.cells.iter().map(|c| group_mass(inst.marginal(), c)).collect();
    let gamma = masses.iter().min().expect("at least one cell").clone();
    if *eps > gamma {
        return Err(Error::precondition(format!(
            "eps = {} exceeds the smallest cell mass gamma = {}",
            crate::rational::format_rational(eps),
            crate::rational::format_rational(&gamma)
        )));
    }
    let cell_eps = eps / Rational::from_integer(BigInt::from(cfg.cell_eps_divisor.max(1)));
    let l_big = Rational::from_integer(BigInt::from(l));
    let size = cfg.batch_size(&cell_eps);
    let count = cfg.batch_count(&(delta / &l_big));
    let per_cell = size * count;
    let ln_term = 8.0 * (l as f64 / to_f64(delta)).ln();
    let total = ((2.0 * per_cell as f64 + ln_term) / to_f64(&gamma)).ceil() as u64;

    let mut cell_of = vec![0usize; inst.n()];
    let mut pos_in_cell = vec![0usize; inst.n()];
    let mut cell_vals = Vec::with_capacity(l);
    for (ci, c) in part.cells.iter().enumerate() {
        let (vals, idx) = value_index(inst, c.members());
        for (k, &x) in c.members().iter().enumerate() {
            cell_of[x] = ci;
            pos_in_cell[x] = idx[k];
        }
        cell_vals.push(vals);
    }
    // Per cell: the ordered (value index, label) stream up to per_cell draws, tallied per batch.
    let mut seen = vec![0u64; l];
    let mut tallies: Vec<Vec<Vec<(u64, u64)>>> =
        cell_vals.iter().map(|v| vec![vec![(0, 0); v.len()]; count as usize]).collect();
    let mut raw: Vec<Vec<(usize, bool)>> = vec![Vec::new(); l];

    let sampler = Sampler::new(inst);
    const CHUNK: u64 = 1 << 16;
    let mut drawn = 0u64;
    let mut stream = 0u64;
    while drawn < total {
        let mut rng = SplitMix64::seed_from_u64(derive_seed(seed, stream));
        let take = CHUNK.min(total - drawn);
        for _ in 0..take {
            let (x, y) = sampler.draw(&mut rng);
            let c = cell_of[x];
            let k = seen[c];
            seen[c] += 1;
            if k < per_cell {
                let t = &mut tallies[c][(k / size) as usize][pos_in_cell[x]];
                t.0 += 1;
                t.1 += y as u64;
                raw[c].push((pos_in_cell[x], y));
            }
        }
        drawn += take;
        stream += 1;
    }

    let m_big = Rational::from_integer(BigInt::from(total));
    let mut theta = Rational::zero();
    for c in 0..l {
        let p_hat = Rational::from_integer(BigInt::from(seen[c])) / &m_big;
        if seen[c] == 0 {
            continue;
        }
        let batches: Vec<Vec<(u64, u64)>> = if seen[c] >= per_cell {
            std::mem::take(&mut tallies[c])
        } else {
            // Short cell: spread the received draws over `count` batches.
            let have = raw[c].len();
            let nb = (count as usize).min(have).max(1);
            let mut out = vec![vec![(0u64, 0u64); cell_vals[c].len()]; nb];
            for (k, &(vi, y)) in raw[c].iter().enumerate() {
                let t = &mut out[k * nb / have][vi];
                t.0 += 1;
                t.1 += y as u64;
            }
            out
        };
        let mus = batches
            .iter()
            .map(|t| smce_from_counts(&counts_of(&cell_vals[c], t)))
            .collect::<Result<Vec<_>>>()?;
        theta += p_hat * lower_median(mus);
    }
    Ok(IntervalEstimate {
        lower: &theta - eps,
        upper: SqrtSum { coef: int(4), a: &l_big * &theta, b: eps.clone() },
        point: theta,
        confidence: Rational::one() - delta,
        samples_used: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_three_point;
    use crate::rational::q;

    #[test]
    fn schedule_constants() {
        assert_eq!(batch_size(&q(1, 50)), 10_000);
        assert_eq!(batch_count(&q(1, 20)), 54);
        assert_eq!(batch_count(&q(1, 60)), 74);
    }

    #[test]
    fn degenerate_labels() {
        let ones = Instance::build(vec![q(1, 2); 2], vec![int(1); 2], vec![q(1, 2); 2], vec![vec![0, 1]]).unwrap();
        assert!(sample(&ones, 500, 1).iter().all(|s| s.1));
        let zeros = ones.with_ground_truth(crate::PredictorVec::constant(2, int(0)).unwrap()).unwrap();
        assert!(sample(&zeros, 500, 1).iter().all(|s| !s.1));
    }

    #[test]
    fn smce_spot_values() {
        assert!(smce_empirical(&[(int(0), false), (int(1), true)]).unwrap().is_zero());
        assert_eq!(smce_empirical(&vec![(q(3, 10), true); 4]).unwrap(), q(7, 10));
        assert!(smce_empirical(&[(q(1, 2), true), (q(1, 2), false)]).unwrap().is_zero());
    }

    #[test]
    fn point_frequencies() {
        let inst = gen_three_point(&q(1, 10)).unwrap();
        let s = sample(&inst, 30_000, 9);
        let freq = s.iter().filter(|d| d.0 == 1).count() as f64 / 30_000.0;
        assert!((freq - 1.0 / 3.0).abs() <= 0.02, "{freq}");
        let s2 = Subgroup::new(vec![1, 2]).unwrap();
        assert!(sample_conditional(&inst, &s2, 1000, 4).iter().all(|d| d.0 != 0));
    }

    #[test]
    fn intervals_are_seed_deterministic() {
        let inst = gen_three_point(&q(1, 10)).unwrap();
        let s2 = Subgroup::new(vec![1, 2]).unwrap();
        let a = dce_interval(&inst, &s2, &q(1, 10), &q(1, 5), 42).unwrap();
        let b = dce_interval(&inst, &s2, &q(1, 10), &q(1, 5), 42).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(&q(1, 20)));
        let err = dimc_interval(&inst, &q(1, 2), &q(1, 5), 1).unwrap_err();
        assert!(err.to_string().contains("gamma = 1/3"), "{err}");
    }
}
