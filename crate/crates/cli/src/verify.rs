//! The acceptance suite: fourteen fixed checks with pinned seeds, sizes and time limits.

use std::fmt;
use std::time::{Duration, Instant};

use mcal_core::distances::{dce, dcma, dimc, dmc, dmc_lowdeg_bruteforce, generated_partition, intersection_closure, wdmc};
use mcal_core::enumerate::{is_degree_r_multicalibrated, is_multiaccurate};
use mcal_core::estimators::{dce_interval, dimc_interval};
use mcal_core::instances::{
    fibonacci, gen_cdmc_example, gen_dcma_example, gen_fibonacci, gen_hypercube, gen_random, gen_ring,
    gen_three_point, gen_wdmc_local_min, jitter_ground_truth, FibonacciGroups,
};
use mcal_core::landscape::{local_min_probe, Metric};
use mcal_core::multiaccuracy::{bias, dma};
use mcal_core::rational::{format_rational, int, q};
use mcal_core::{conditional_l1, l1_distance, Instance, PredictorVec, Rational, Subgroup, SubgroupCollection};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Master seed from which every randomized criterion derives its instances.
pub const SUITE_SEED: u64 = 20_240_601;

pub type Check = fn() -> mcal_core::Result<Outcome>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub limit: Duration,
    pub check: Check,
}

/// What a check observed; `passed` is decided by the check itself.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {:<34} {:>8.2}s / {:>4}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

pub fn suite() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "three-point discontinuity curve", limit: secs(1), check: three_point_curve },
        Criterion { id: 2, name: "wdmc <= dmc <= dimc", limit: secs(120), check: hierarchy },
        Criterion { id: 3, name: "dimc over closure and partition", limit: secs(120), check: closure_equivalence },
        Criterion { id: 4, name: "Lipschitz in the ground truth", limit: secs(120), check: lipschitz },
        Criterion { id: 5, name: "dmc = dimc after jitter", limit: secs(300), check: almost_everywhere },
        Criterion { id: 6, name: "wdmc local minimum", limit: secs(60), check: wdmc_local_minimum },
        Criterion { id: 7, name: "ring family", limit: secs(60), check: ring },
        Criterion { id: 8, name: "continuized example", limit: secs(60), check: cdmc_example },
        Criterion { id: 9, name: "Fibonacci multiaccuracy", limit: secs(60), check: fibonacci_family },
        Criterion { id: 10, name: "dma linear program", limit: secs(120), check: dma_program },
        Criterion { id: 11, name: "dcma discontinuity", limit: secs(60), check: dcma_discontinuity },
        Criterion { id: 12, name: "low-degree discontinuity", limit: secs(60), check: low_degree },
        Criterion { id: 13, name: "estimator coverage", limit: secs(600), check: estimator_coverage },
        Criterion { id: 14, name: "hypercube family", limit: secs(60), check: hypercube },
    ]
}

/// Runs one criterion. A check that errors or overruns its limit fails.
pub fn run(c: &Criterion) -> Row {
    let start = Instant::now();
    let result = (c.check)();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > c.limit {
        passed = false;
        detail = format!("over time limit; {detail}");
    }
    Row {
        id: c.id,
        name: c.name,
        passed,
        detail,
        seconds: elapsed.as_secs_f64(),
        limit_seconds: c.limit.as_secs_f64(),
    }
}

pub fn run_selected(only: &[u8]) -> Vec<Row> {
    suite().iter().filter(|c| only.is_empty() || only.contains(&c.id)).map(run).collect()
}

fn fr(r: &Rational) -> String {
    format_rational(r)
}

/// Seeded random instance number `i` of a criterion's stream: `n` in `2..=6`, up to 3 groups.
fn random_instance(stream: u64, i: u64) -> mcal_core::Result<Instance> {
    let seed = SUITE_SEED ^ (stream << 32) ^ i;
    let n = 2 + (i % 5) as usize;
    let k = 1 + (i / 5 % 3) as usize;
    gen_random(n, k, seed, 10)
}

/// Collects failures across a parallel sweep; the outcome reports the first few.
fn sweep<F>(count: u64, what: &str, check: F) -> mcal_core::Result<Outcome>
where
    F: Fn(u64) -> mcal_core::Result<Option<String>> + Sync,
{
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .map(|i| check(i).map(|r| r.map(|msg| format!("#{i}: {msg}"))))
        .collect::<mcal_core::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let shown: Vec<&String> = failures.iter().take(3).collect();
    Ok(if failures.is_empty() {
        Outcome::new(true, format!("{count} {what}"))
    } else {
        Outcome::new(false, format!("{} of {count} {what} failed: {shown:?}", failures.len()))
    })
}

fn three_point_curve() -> mcal_core::Result<Outcome> {
    let mut seen = Vec::new();
    let mut ok = true;
    for alpha in [q(0, 1), q(1, 20), q(1, 10), q(1, 5)] {
        let inst = gen_three_point(&alpha)?;
        let curve = q(3, 10) + &alpha / int(3);
        let want_dmc = if alpha.is_zero() { int(0) } else { curve.clone() };
        let (d, i) = (dmc(&inst)?.value, dimc(&inst)?.value);
        ok &= d == want_dmc && i == curve;
        seen.push(format!("a={}: dmc={} dimc={}", fr(&alpha), fr(&d), fr(&i)));
    }
    Ok(Outcome::new(ok, seen.join("; ")))
}

fn hierarchy() -> mcal_core::Result<Outcome> {
    sweep(200, "instances", |i| {
        let inst = random_instance(2, i)?;
        let (w, d, c) = (wdmc(&inst)?.value, dmc(&inst)?.value, dimc(&inst)?.value);
        Ok((!(w <= d && d <= c)).then(|| format!("wdmc={} dmc={} dimc={}", fr(&w), fr(&d), fr(&c))))
    })
}

fn closure_equivalence() -> mcal_core::Result<Outcome> {
    sweep(100, "instances", |i| {
        let inst = random_instance(3, i)?;
        let d = dimc(&inst)?.value;
        let over_i = dmc(&inst.with_groups(intersection_closure(inst.groups())?)?)?.value;
        let cells = generated_partition(inst.groups(), inst.n())?.as_collection();
        let over_j = dmc(&inst.with_groups(cells)?)?.value;
        Ok((d != over_i || d != over_j).then(|| format!("dimc={} I={} J={}", fr(&d), fr(&over_i), fr(&over_j))))
    })
}

fn lipschitz() -> mcal_core::Result<Outcome> {
    sweep(200, "pairs", |i| {
        let a = random_instance(4, i)?;
        let other = gen_random(a.n(), 1, SUITE_SEED ^ (44 << 32) ^ i, 10)?;
        let b = a.with_ground_truth(other.ground_truth().clone())?;
        let m = a.marginal();
        let gap = l1_distance(a.ground_truth(), b.ground_truth(), m)?;
        let (da, db) = (dimc(&a)?.value, dimc(&b)?.value);
        if (&da - &db).abs() > gap {
            return Ok(Some(format!("dimc {} vs {} at distance {}", fr(&da), fr(&db), fr(&gap))));
        }
        for s in a.groups().iter() {
            let local = conditional_l1(a.ground_truth(), b.ground_truth(), m, s)?;
            let (ca, cb) = (dce(&a, s)?.value, dce(&b, s)?.value);
            if (&ca - &cb).abs() > local {
                return Ok(Some(format!("dce on {s}: {} vs {} at distance {}", fr(&ca), fr(&cb), fr(&local))));
            }
        }
        Ok(None)
    })
}

fn almost_everywhere() -> mcal_core::Result<Outcome> {
    const DRAWS: u64 = 500;
    let results: Vec<Option<String>> = (0..DRAWS)
        .into_par_iter()
        .map(|i| {
            let base = random_instance(5, i)?;
            let inst = jitter_ground_truth(&base, &q(1, 20), SUITE_SEED ^ (55 << 32) ^ i)?;
            let (d, c) = (dmc(&inst)?, dimc(&inst)?);
            Ok((d.value != c.value).then(|| {
                format!(
                    "#{i}: dmc={} via {:?}, dimc={}",
                    fr(&d.value),
                    d.witness.to_strings(),
                    fr(&c.value)
                )
            }))
        })
        .collect::<mcal_core::Result<_>>()?;
    let misses: Vec<String> = results.into_iter().flatten().collect();
    for m in &misses {
        eprintln!("dmc != dimc certificate {m}");
    }
    let agree = DRAWS - misses.len() as u64;
    Ok(Outcome::new(agree * 100 >= DRAWS * 99, format!("{agree} of {DRAWS} draws agree")))
}

fn wdmc_local_minimum() -> mcal_core::Result<Outcome> {
    let (eps, delta) = (q(1, 200), q(1, 10));
    let inst = gen_wdmc_local_min(&eps, &delta)?;
    let w = wdmc(&inst)?.value;
    let probe = local_min_probe(Metric::Wdmc, &inst, &q(1, 100), 2000, SUITE_SEED)?;
    let at_truth = inst.with_audited(inst.ground_truth().clone())?;
    let w_truth = wdmc(&at_truth)?.value;
    let far = l1_distance(inst.audited(), inst.ground_truth(), inst.marginal())?;
    let ok = w == eps && !probe.found_decrease() && w_truth.is_zero() && far == delta;
    Ok(Outcome::new(
        ok,
        format!(
            "wdmc={} best of 2000 probes at radius 1/100={} wdmc(p*)={} l1(f,p*)={}",
            fr(&w),
            fr(&probe.best),
            fr(&w_truth),
            fr(&far)
        ),
    ))
}

fn ring() -> mcal_core::Result<Outcome> {
    let inst = gen_ring(1)?;
    let (d, c) = (dmc(&inst)?.value, dimc(&inst)?.value);
    let cells = generated_partition(inst.groups(), inst.n())?.len();
    let ok = d.is_zero() && c == q(3, 10) && cells == 4;
    Ok(Outcome::new(ok, format!("dmc={} dimc={} cells={cells}", fr(&d), fr(&c))))
}

fn cdmc_example() -> mcal_core::Result<Outcome> {
    let inst = gen_cdmc_example()?;
    let c = dimc(&inst)?.value;
    let dist = l1_distance(inst.audited(), inst.ground_truth(), inst.marginal())?;
    Ok(Outcome::new(c.is_zero() && dist == q(3, 20), format!("dimc={} l1(f,p*)={}", fr(&c), fr(&dist))))
}

fn fibonacci_family() -> mcal_core::Result<Outcome> {
    let mut ok = true;
    let mut seen = Vec::new();
    for k in [3usize, 4, 5] {
        let fk1 = Rational::from_integer(fibonacci(k as u32 + 1));
        // Half of the largest admissible eps.
        let eps = int(1) / (int(4 * (k as i64 + 1)) * &fk1);
        let delta = int(2 * (k as i64 + 1)) * &eps;
        let inst = gen_fibonacci(k, &eps)?;
        let groups = FibonacciGroups::for_k(k);
        let all = inst.groups().groups();
        let w = mcal_core::multiaccuracy::wdma(&inst)?.value;
        let d = dma(&inst)?.value;
        let mut biases_ok = true;
        for &i in groups.u.iter().chain(&groups.v) {
            biases_ok &= bias(inst.audited(), &inst, &all[i])?.is_zero();
        }
        biases_ok &= bias(inst.audited(), &inst, &all[groups.w])? == &delta / int(2);
        let floor = &fk1 * &eps / int(3);
        ok &= w == eps && d >= floor && biases_ok;
        seen.push(format!("k={k}: wdma={} dma={} >= {}", fr(&w), fr(&d), fr(&floor)));
    }
    Ok(Outcome::new(ok, seen.join("; ")))
}

fn dma_program() -> mcal_core::Result<Outcome> {
    sweep(100, "instances", |i| {
        let inst = random_instance(10, i)?;
        let at_truth = inst.with_audited(inst.ground_truth().clone())?;
        let zero = dma(&at_truth)?.value;
        if !zero.is_zero() {
            return Ok(Some(format!("dma(p*)={}", fr(&zero))));
        }
        let d = dma(&inst)?;
        if !is_multiaccurate(&d.witness, &inst) {
            return Ok(Some(format!("witness {:?} is not multiaccurate", d.witness.to_strings())));
        }
        let full = Subgroup::full(inst.n());
        let single = inst.with_groups(SubgroupCollection::new(vec![full.clone()])?)?;
        let (one, b) = (dma(&single)?.value, bias(inst.audited(), &inst, &full)?);
        Ok((one != b).then(|| format!("single-group dma={} bias={}", fr(&one), fr(&b))))
    })
}

fn dcma_discontinuity() -> mcal_core::Result<Outcome> {
    let (base, perturbed) = gen_dcma_example(&q(1, 100))?;
    let (a, b) = (dcma(&base)?.value, dcma(&perturbed)?.value);
    Ok(Outcome::new(a.is_zero() && b > q(1, 60), format!("dcma under p*={} under q*={}", fr(&a), fr(&b))))
}

fn low_degree() -> mcal_core::Result<Outcome> {
    let at0 = gen_three_point(&q(0, 1))?;
    let at1 = gen_three_point(&q(1, 10))?;
    let half = PredictorVec::constant(3, q(1, 2))?;
    let (m0, m1) = (is_degree_r_multicalibrated(&half, &at0, 2), is_degree_r_multicalibrated(&half, &at1, 2));
    let r = dmc_lowdeg_bruteforce(&at1, 2, 100)?;
    let ok = m0 && !m1 && r.value >= q(3, 10);
    Ok(Outcome::new(ok, format!("degree-2 at a=0: {m0}, at a=1/10: {m1}; grid distance {}", r.describe())))
}

fn estimator_coverage() -> mcal_core::Result<Outcome> {
    const RUNS: u64 = 100;
    let inst = gen_three_point(&q(1, 10))?;
    let s2 = inst.groups().groups()[1].clone();
    let (eps, delta) = (q(1, 50), q(1, 20));
    let exact_dce = dce(&inst, &s2)?.value;
    let exact_dimc = dimc(&inst)?.value;
    debug_assert!(exact_dce == q(1, 20) && exact_dimc == q(1, 3));
    let hits: Vec<(bool, bool)> = (0..RUNS)
        .into_par_iter()
        .map(|i| {
            let seed = SUITE_SEED ^ (13 << 32) ^ i;
            let a = dce_interval(&inst, &s2, &eps, &delta, seed)?;
            let b = dimc_interval(&inst, &eps, &delta, seed)?;
            Ok((a.contains(&exact_dce), b.contains(&exact_dimc)))
        })
        .collect::<mcal_core::Result<_>>()?;
    let dce_hits = hits.iter().filter(|h| h.0).count();
    let dimc_hits = hits.iter().filter(|h| h.1).count();
    Ok(Outcome::new(
        dce_hits >= 95 && dimc_hits >= 95,
        format!("dce bracketed {} in {dce_hits}/{RUNS}; dimc bracketed {} in {dimc_hits}/{RUNS}", fr(&exact_dce), fr(&exact_dimc)),
    ))
}

fn hypercube() -> mcal_core::Result<Outcome> {
    let h = gen_hypercube(4)?;
    let base = dimc(&h.base)?.value;
    let t = h.random_subset(SUITE_SEED);
    let sampled = dimc(&h.with_subset(&t)?)?.value;
    Ok(Outcome::new(
        base.is_zero() && sampled == q(1, 2),
        format!("dimc under D_0={} under D_T={} (|T|={})", fr(&base), fr(&sampled), t.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_one_through_fourteen() {
        let ids: Vec<u8> = suite().iter().map(|c| c.id).collect();
        assert_eq!(ids, (1..=14).collect::<Vec<_>>());
    }

    #[test]
    fn quick_rows_pass() {
        for row in run_selected(&[1, 7, 8, 11]) {
            assert!(row.passed, "{row}");
        }
    }
}
