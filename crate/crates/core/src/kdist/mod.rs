//! The two k-distinctness learning graphs and the combinatorics behind them.
//!
//! Inputs follow a promise: for every `t < k` there are `l_t` disjoint
//! `t`-tuples of equal values, laid out in blocks `A_1, ..., A_{k-1}`, plus
//! (for positive inputs) a block `M` of `k` equal values. The staged
//! construction loads elements in rounds that each add one fresh `i`-subtuple
//! and forbids vertices whose specification drifts from what a random subset
//! of the tuple blocks would look like.

mod alg1;
mod baseline;
mod counting;
mod scaling;
mod schedule;

pub use alg1::{build_alg1_tiny, collapsed_estimate, Alg1Artifacts, Alg1Weights, CollapsedReport, CollapsedRow, KeyFlowModel};
pub use baseline::{baseline_collapsed, baseline_specialities, build_baseline_graph, BaselineArtifacts, StepWeights};
pub use counting::{
    count_by_specification, count_by_type, d_function, expected_subtuples, flow_on_arc, specs_of_size,
    tuple_count_ratio, types_for_spec,
};
pub use scaling::{estimate_at, least_squares, scaling_experiment, Construction, ScalingFit};
pub use schedule::{dead_end_caps, original_spec, transition, Schedule, StepLabel};

use num::{BigInt, BigRational, One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{FunctionSpec, InputPoint, Subset};
use crate::error::{Error, Result};
use crate::symmetry::{Block, BlockLayout};

/// `(rho_0, ..., rho_k)`: `rho_0 = 1`, `rho_k = 1/2`, and each difference
/// `rho_{i-1} - rho_i` half the previous one.
pub fn rho_exponents(k: usize) -> Result<Vec<BigRational>> {
    if k < 2 {
        return Err(Error::input("k must be at least 2"));
    }
    if k > 60 {
        return Err(Error::input("k above 60 is not supported"));
    }
    let pow = |e: usize| BigInt::one() << e;
    // first difference 2^{k-2} / (2^k - 1), then halving
    let mut diff = BigRational::new(pow(k - 2), pow(k) - BigInt::one());
    let mut rho = vec![BigRational::one()];
    for _ in 0..k {
        let next = rho.last().unwrap() - &diff;
        rho.push(next);
        diff /= BigInt::from(2);
    }
    Ok(rho)
}

/// `l_1, ..., l_{k-1}`: promised numbers of `t`-tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Promise {
    pub k: usize,
    pub ell: Vec<usize>,
}

impl Promise {
    pub fn new(k: usize, ell: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::input("k must be at least 2"));
        }
        if ell.len() != k - 1 {
            return Err(Error::input(format!(
                "the promise lists {} tuple counts but k = {k} needs {}",
                ell.len(),
                k - 1
            )));
        }
        Ok(Promise { k, ell })
    }

    /// `l_s`, 1-based.
    pub fn get(&self, s: usize) -> usize {
        self.ell[s - 1]
    }

    /// `n' = |A_{>=1}| = sum_s s l_s`.
    pub fn n_prime(&self) -> usize {
        self.ell.iter().enumerate().map(|(i, l)| (i + 1) * l).sum()
    }

    pub fn tuples(&self) -> usize {
        self.ell.iter().sum()
    }
}

/// `r_1 > r_2 > ... > r_{k-1} >= 1`, with `r_0 = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageParams {
    pub k: usize,
    pub n: usize,
    r: Vec<usize>,
}

impl StageParams {
    pub fn new(k: usize, n: usize, r: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::input("k must be at least 2"));
        }
        if r.len() != k - 1 {
            return Err(Error::input(format!("k = {k} needs {} stage sizes, got {}", k - 1, r.len())));
        }
        if r.iter().any(|&v| v == 0) {
            return Err(Error::input("stage sizes must be at least 1"));
        }
        if r.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::input(format!("stage sizes {r:?} are not strictly decreasing")));
        }
        if r[0] > n {
            return Err(Error::input(format!("r_1 = {} exceeds n = {n}", r[0])));
        }
        Ok(StageParams { k, n, r })
    }

    /// `r_i = max(1, round(n^{rho_i}))`.
    pub fn from_exponents(k: usize, n: usize) -> Result<Self> {
        let rho = rho_exponents(k)?;
        let r = (1..k)
            .map(|i| {
                let e = rho[i].to_f64().unwrap();
                ((n as f64).powf(e).round() as usize).max(1)
            })
            .collect();
        StageParams::new(k, n, r)
    }

    /// `r_i` for `0 <= i <= k-1`, with `r_0 = n`.
    pub fn r(&self, i: usize) -> usize {
        if i == 0 {
            self.n
        } else {
            self.r[i - 1]
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.r
    }

    /// Violations of `sqrt(r_1) r_2 << n` and `sqrt(r_1) << r_i` at this `n`.
    pub fn asymptotic_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let s1 = (self.r(1) as f64).sqrt();
        if self.k >= 3 && s1 * self.r(2) as f64 >= self.n as f64 {
            out.push(format!(
                "sqrt(r_1) * r_2 = {:.1} is not below n = {}",
                s1 * self.r(2) as f64,
                self.n
            ));
        }
        for i in 2..self.k {
            if s1 >= self.r(i) as f64 {
                out.push(format!("sqrt(r_1) = {s1:.2} is not below r_{i} = {}", self.r(i)));
            }
        }
        out
    }
}

/// A concrete instance realising a promise: block layout plus a positive
/// input (with the marked `k`-tuple) and a negative one (without).
#[derive(Clone, Debug)]
pub struct PromisedInstance {
    pub promise: Promise,
    pub n: usize,
    pub layout: BlockLayout,
    pub positive: InputPoint,
    pub negative: InputPoint,
    /// Alphabet size: every distinct value of the negative input.
    pub m: u32,
}

impl PromisedInstance {
    pub fn k(&self) -> usize {
        self.promise.k
    }

    pub fn function(&self) -> Result<FunctionSpec> {
        FunctionSpec::k_distinctness(self.k(), self.n, self.m)
    }

    pub fn slack(&self) -> usize {
        self.n - self.promise.n_prime() - self.k()
    }

    /// Indices of tuple `id` in block `A_size`.
    pub fn tuple(&self, size: usize, id: usize) -> Subset {
        self.layout.indices_where(|b| b == Block::Tuple { size, id })
    }

    /// All tuples of `A_s` as index sets.
    pub fn tuples_of(&self, size: usize) -> Vec<Subset> {
        (0..self.promise.get(size)).map(|id| self.tuple(size, id)).collect()
    }
}

/// Lays out `A_1, ..., A_{k-1}`, `M` and the slack on a seeded shuffle of the
/// indices. Each tuple gets its own value; `M` shares one value in the
/// positive input and is filled with fresh singletons in the negative one, as
/// is the slack.
pub fn build_promised_instance(k: usize, n: usize, ell: &[usize], seed: u64) -> Result<PromisedInstance> {
    let promise = Promise::new(k, ell.to_vec())?;
    let needed = promise.n_prime() + k;
    if needed > n {
        return Err(Error::input(format!(
            "the promise needs {} tuple indices plus {k} marked ones, more than n = {n}",
            promise.n_prime()
        )));
    }
    if n > 64 {
        return Err(Error::input("instances are limited to n <= 64"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut blocks = vec![Block::Slack; n];
    let mut positive = vec![0u32; n];
    let mut negative = vec![0u32; n];
    let mut next_value = 1u32;
    let mut cursor = 0;
    for size in 1..k {
        for id in 0..promise.get(size) {
            for _ in 0..size {
                let i = order[cursor];
                cursor += 1;
                blocks[i] = Block::Tuple { size, id };
                positive[i] = next_value;
                negative[i] = next_value;
            }
            next_value += 1;
        }
    }
    let marked_value = next_value;
    for _ in 0..k {
        let i = order[cursor];
        cursor += 1;
        blocks[i] = Block::Marked;
        positive[i] = marked_value;
        negative[i] = next_value;
        next_value += 1;
    }
    for &i in &order[cursor..] {
        positive[i] = next_value;
        negative[i] = next_value;
        next_value += 1;
    }
    Ok(PromisedInstance {
        promise,
        n,
        layout: BlockLayout { k, blocks },
        positive: InputPoint::new(positive)?,
        negative: InputPoint::new(negative)?,
        m: next_value - 1,
    })
}
