//! Generators for the counterexample families and for seeded random instances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Instance, InstanceData, PredictorVec};
use crate::error::{Error, Result};
use crate::rational::{format_rational, int, q, serde_str, Rational};

fn uniform_data(n: usize, p_star: Vec<Rational>, f: Vec<Rational>, groups: Vec<Vec<usize>>) -> InstanceData {
    InstanceData { n, labels: None, marginal: vec![q(1, n as i64); n], p_star, f, groups }
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(what()))
    }
}

/// Three uniform points, `p* = (4/5, 1/5, 4/5 + alpha)`, `f = 1/2`, groups `{x1,x2}`, `{x2,x3}`.
pub fn gen_three_point(alpha: &Rational) -> Result<Instance> {
    require(!alpha.is_negative() && *alpha <= q(1, 5), || {
        format!("alpha = {} must lie in [0, 1/5]", format_rational(alpha))
    })?;
    Instance::new(uniform_data(
        3,
        vec![q(4, 5), q(1, 5), q(4, 5) + alpha],
        vec![q(1, 2); 3],
        vec![vec![0, 1], vec![1, 2]],
    ))
}

/// The three-point family whose `f` is a local minimum of wdMC with value `eps`
/// yet at distance `delta` from `p*`.
pub fn gen_wdmc_local_min(eps: &Rational, delta: &Rational) -> Result<Instance> {
    let half = q(1, 2);
    require(eps.is_positive(), || "eps > 0 fails".into())?;
    require(!delta.is_negative() && *delta < half, || "0 <= delta < 1/2 fails".into())?;
    require(delta + int(6) * eps <= half, || "delta + 6 eps <= 1/2 fails".into())?;
    require(*eps <= delta / int(9), || "eps <= delta / 9 fails".into())?;
    let six = int(6) * eps;
    let three = int(3) * eps;
    Instance::new(uniform_data(
        3,
        vec![&half + delta - &six, &half - delta, &half + delta + &six],
        vec![&half - &three, half.clone(), &half + &three],
        vec![vec![0, 1], vec![1, 2]],
    ))
}

/// `4N` uniform points in four blocks; point `(i, j)` has index `(i-1)N + (j-1)`.
/// Groups are the four cyclically adjacent block pairs and the whole domain.
pub fn gen_ring(n_per_block: usize) -> Result<Instance> {
    require(n_per_block >= 1, || "N >= 1 fails".into())?;
    let nb = n_per_block;
    let block = |i: usize| (i * nb..(i + 1) * nb).collect::<Vec<_>>();
    let pair = |a: usize, b: usize| {
        let mut v = block(a);
        v.extend(block(b));
        v
    };
    // Blocks are 0-based here, so 1-based even blocks are the odd indices.
    let p_star = (0..4 * nb).map(|x| if (x / nb) % 2 == 1 { q(4, 5) } else { q(1, 5) }).collect();
    Instance::new(uniform_data(
        4 * nb,
        p_star,
        vec![q(1, 2); 4 * nb],
        vec![pair(0, 1), pair(1, 2), pair(2, 3), pair(3, 0), (0..4 * nb).collect()],
    ))
}

/// The hypercube family on `{0,1}^(k-1)`. Point `x` encodes coordinate `i` in bit `i`.
#[derive(Clone, Debug)]
pub struct Hypercube {
    pub k: u32,
    /// Ground truth identically 1/2.
    pub base: Instance,
}

impl Hypercube {
    pub fn dim(&self) -> usize {
        1usize << (self.k - 1)
    }

    /// The instance whose ground truth is the indicator of `t`, `|t| = 2^(k-2)`.
    pub fn with_subset(&self, t: &[usize]) -> Result<Instance> {
        let n = self.dim();
        let mut hit = vec![false; n];
        for &x in t {
            require(x < n, || format!("point {x} outside the cube of {n} points"))?;
            require(!hit[x], || format!("point {x} listed twice"))?;
            hit[x] = true;
        }
        require(t.len() == n / 2, || format!("|T| = {} but must equal 2^(k-2) = {}", t.len(), n / 2))?;
        let p = PredictorVec::new(hit.iter().map(|&h| if h { int(1) } else { int(0) }).collect())?;
        self.base.with_ground_truth(p)
    }

    /// A uniformly random half of the cube.
    pub fn random_subset(&self, seed: u64) -> Vec<usize> {
        let mut pts: Vec<usize> = (0..self.dim()).collect();
        pts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut t = pts[..self.dim() / 2].to_vec();
        t.sort_unstable();
        t
    }
}

pub fn gen_hypercube(k: u32) -> Result<Hypercube> {
    require((2..=16).contains(&k), || format!("k = {k} must satisfy 2 <= k <= 16"))?;
    let n = 1usize << (k - 1);
    let mut groups: Vec<Vec<usize>> =
        (0..k - 1).map(|i| (0..n).filter(|x| (x >> i) & 1 == 1).collect()).collect();
    groups.push(vec![0]);
    let base = Instance::new(uniform_data(n, vec![q(1, 2); n], vec![q(1, 2); n], groups))?;
    Ok(Hypercube { k, base })
}

/// Four uniform points where `f` is multicalibrated yet `3/20` away from `p*`.
pub fn gen_cdmc_example() -> Result<Instance> {
    Instance::new(uniform_data(
        4,
        vec![q(3, 10), q(1, 5), q(4, 5), q(4, 5)],
        vec![q(3, 10), q(1, 2), q(1, 2), q(4, 5)],
        vec![vec![0, 1, 2], vec![1, 2, 3]],
    ))
}

/// `F_0 = 0, F_1 = 1`.
pub fn fibonacci(i: u32) -> BigInt {
    let (mut a, mut b) = (BigInt::zero(), BigInt::one());
    for _ in 0..i {
        let c = &a + &b;
        a = std::mem::replace(&mut b, c);
    }
    a
}

/// Indices into the group list of [`gen_fibonacci`].
pub struct FibonacciGroups {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub w: usize,
}

impl FibonacciGroups {
    pub fn for_k(k: usize) -> Self {
        Self { u: (0..k).collect(), v: (k..2 * k - 1).collect(), w: 2 * k - 1 }
    }
}

/// Points `x_0..x_(2k+1)` with groups `U_1..U_k`, `V_1..V_(k-1)`, `W` (in that order).
pub fn gen_fibonacci(k: usize, eps: &Rational) -> Result<Instance> {
    require(k >= 1, || "k >= 1 fails".into())?;
    let kk = k as i64;
    let f_k1 = Rational::from_integer(fibonacci(k as u32 + 1));
    let cap = Rational::one() / (int(2 * (kk + 1)) * &f_k1);
    require(eps.is_positive() && *eps < cap, || {
        format!("eps = {} must lie in (0, {})", format_rational(eps), format_rational(&cap))
    })?;
    let n = 2 * k + 2;
    let delta = int(2 * (kk + 1)) * eps;
    let sign = |i: usize| if i.is_multiple_of(2) { int(1) } else { int(-1) };
    let parity = |i: usize| if i.is_multiple_of(2) { int(0) } else { int(1) };

    let mut p = vec![Rational::zero(); n];
    p[0] = int(0);
    p[2] = int(1);
    for i in 1..=k + 1 {
        let fi = Rational::from_integer(fibonacci(i as u32));
        p[2 * i - 1] = parity(i) + sign(i) * fi * &delta;
    }
    for i in 1..k {
        p[2 * i + 2] = int(1) - &p[2 * i - 1];
    }
    let mut f = vec![Rational::zero(); n];
    for i in 0..=k {
        f[2 * i] = parity(i);
        f[2 * i + 1] = int(1) - &f[2 * i];
    }
    let mut groups: Vec<Vec<usize>> = (1..=k).map(|i| vec![2 * i - 1, 2 * i, 2 * i + 1]).collect();
    groups.extend((1..k).map(|i| vec![2 * i - 1, 2 * i + 2]));
    groups.push(vec![0, 1]);
    Instance::new(uniform_data(n, p, f, groups))
}

/// Six uniform points and three overlapping triples. Returns the instance
/// under `p*` and under `q*`, which lowers `p*(x2)` by `eps`.
pub fn gen_dcma_example(eps: &Rational) -> Result<(Instance, Instance)> {
    require(eps.is_positive() && *eps <= q(1, 10), || {
        format!("eps = {} must lie in (0, 1/10]", format_rational(eps))
    })?;
    let p = vec![q(3, 5), q(1, 5), q(7, 10), q(3, 10), q(1, 2), q(2, 5)];
    let f = vec![q(3, 5), q(3, 10), q(3, 5), q(3, 10), q(3, 5), q(3, 10)];
    let groups = vec![vec![0, 1, 2], vec![2, 3, 4], vec![0, 4, 5]];
    let base = Instance::new(uniform_data(6, p.clone(), f.clone(), groups.clone()))?;
    let mut qs = p;
    qs[1] = q(1, 5) - eps;
    let perturbed = Instance::new(uniform_data(6, qs, f, groups))?;
    Ok((base, perturbed))
}

/// Seeded random instance: `n` points, `k` distinct groups covering the
/// domain, `p*` and `f` on the grid `1/grid`. Marginals are uniform or
/// proportional to random weights in `1..=5`.
pub fn gen_random(n: usize, k: usize, seed: u64, grid: u32) -> Result<Instance> {
    require(n >= 1 && k >= 1 && grid >= 1, || "n, k and grid must be positive".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marginal = if rng.random_bool(0.5) {
        vec![q(1, n as i64); n]
    } else {
        let w: Vec<i64> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let total: i64 = w.iter().sum();
        w.into_iter().map(|v| q(v, total)).collect()
    };
    let on_grid = |rng: &mut ChaCha8Rng| q(rng.random_range(0..=grid) as i64, grid as i64);
    let p_star = (0..n).map(|_| on_grid(&mut rng)).collect();
    let f = (0..n).map(|_| on_grid(&mut rng)).collect();
    let max_groups = if n >= 63 { usize::MAX } else { (1usize << n) - 1 };
    let k = k.min(max_groups);
    let groups = loop {
        let mut groups: Vec<Vec<usize>> = Vec::with_capacity(k);
        while groups.len() < k {
            let g: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if !g.is_empty() && !groups.contains(&g) {
                groups.push(g);
            }
        }
        for x in 0..n {
            if !groups.iter().any(|g| g.contains(&x)) {
                let i = rng.random_range(0..k);
                groups[i].push(x);
                groups[i].sort_unstable();
            }
        }
        let mut sorted = groups.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() == groups.len() {
            break groups;
        }
    };
    Instance::new(InstanceData { n, labels: None, marginal, p_star, f, groups })
}

/// Denominator of the fine grid used by [`jitter_ground_truth`]; prime so that
/// jittered values rarely share structure with coarse-grid data.
pub const JITTER_GRID: i64 = 1_000_003;

/// Moves each `p*(x)` by an independent offset in `[-scale, scale]` on the
/// grid `scale / JITTER_GRID`, clipped to `[0,1]`.
pub fn jitter_ground_truth(inst: &Instance, scale: &Rational, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = inst
        .ground_truth()
        .values()
        .iter()
        .map(|v| {
            let u = rng.random_range(-JITTER_GRID..=JITTER_GRID);
            let moved = v + scale * q(u, JITTER_GRID);
            moved.clamp(int(0), int(1))
        })
        .collect();
    inst.with_ground_truth(PredictorVec::new(values)?)
}

/// Parameters naming one generated instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InstanceSpecParams {
    ThreePoint {
        #[serde(with = "serde_str")]
        alpha: Rational,
    },
    WdmcLocalMin {
        #[serde(with = "serde_str")]
        eps: Rational,
        #[serde(with = "serde_str")]
        delta: Rational,
    },
    Ring {
        n: usize,
    },
    Hypercube {
        k: u32,
        /// `None` gives the uniform ground truth; otherwise a random half chosen by this seed.
        subset_seed: Option<u64>,
    },
    Cdmc,
    Fibonacci {
        k: usize,
        #[serde(with = "serde_str")]
        eps: Rational,
    },
    Dcma {
        #[serde(with = "serde_str")]
        eps: Rational,
        perturbed: bool,
    },
    Random {
        n: usize,
        k: usize,
        seed: u64,
        grid: u32,
    },
}

impl InstanceSpecParams {
    pub fn generate(&self) -> Result<Instance> {
        match self {
            Self::ThreePoint { alpha } => gen_three_point(alpha),
            Self::WdmcLocalMin { eps, delta } => gen_wdmc_local_min(eps, delta),
            Self::Ring { n } => gen_ring(*n),
            Self::Hypercube { k, subset_seed } => {
                let h = gen_hypercube(*k)?;
                match subset_seed {
                    None => Ok(h.base),
                    Some(s) => h.with_subset(&h.random_subset(*s)),
                }
            }
            Self::Cdmc => gen_cdmc_example(),
            Self::Fibonacci { k, eps } => gen_fibonacci(*k, eps),
            Self::Dcma { eps, perturbed } => {
                let (a, b) = gen_dcma_example(eps)?;
                Ok(if *perturbed { b } else { a })
            }
            Self::Random { n, k, seed, grid } => gen_random(*n, *k, *seed, *grid),
        }
    }
}
