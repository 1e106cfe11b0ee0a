//! Monte Carlo checks of the concentration statements behind the staged
//! construction: a martingale tail against Azuma's bound, the spread of
//! type matrices of random subsets, and the variation of key-vertex flow
//! across types.
//!
//! Trials run in chunks of [`CHUNK`]; chunk `c` draws from ChaCha8 seeded
//! with the configured seed on stream `c`, and chunk results are reduced in
//! chunk order, so a report depends only on `(seed, trials)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::kdist::{count_by_specification, count_by_type, specs_of_size, types_for_spec, KeyFlowModel, Promise, Schedule};
use crate::symmetry::{type_distance, Specification, TypeMatrix};

/// Trials per RNG stream.
pub const CHUNK: u64 = 4096;

/// Rejected draws allowed per accepted sample before giving up.
pub const REJECTION_CAP: u64 = 1000;

/// Exceedance counts below this mark a row as low-confidence.
pub const MIN_EVENTS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub trials: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::input("at least one trial is needed"));
        }
        Ok(SamplerConfig { seed, trials })
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let count = self.trials.div_ceil(CHUNK);
        (0..count)
            .map(|c| (c, CHUNK.min(self.trials - c * CHUNK)))
            .collect()
    }

    /// Runs `f(rng, quota)` per chunk in parallel; results come back in
    /// chunk order.
    fn run<A: Send>(&self, f: impl Fn(&mut ChaCha8Rng, u64) -> Result<A> + Sync) -> Result<Vec<A>> {
        self.chunks()
            .into_par_iter()
            .map(|(c, quota)| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(c);
                f(&mut rng, quota)
            })
            .collect()
    }
}

/// `exp(-lambda^2 / 2)`.
pub fn azuma_bound(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::input(format!("lambda = {lambda}: the bound is trivial unless lambda > 0")));
    }
    Ok((-lambda * lambda / 2.0).exp())
}

/// `0, 0.25, ..., 3`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.25).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub lambda: f64,
    pub events: u64,
    pub empirical: f64,
    /// The bound being tested, when there is one.
    pub bound: Option<f64>,
    /// `sqrt(p (1 - p) / trials)`.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub trials: u64,
    pub rows: Vec<TailRow>,
    /// `lambda^2` is divided by this before fitting `exp(-a lambda^2 / scale)`.
    pub scale: f64,
    pub fitted_rate: Option<f64>,
    pub r_squared: Option<f64>,
}

impl TailReport {
    fn from_counts(trials: u64, grid: &[f64], counts: &[u64], bound: impl Fn(f64) -> Option<f64>, scale: f64) -> Self {
        let rows: Vec<TailRow> = grid
            .iter()
            .zip(counts)
            .map(|(&lambda, &events)| {
                let p = events as f64 / trials as f64;
                TailRow {
                    lambda,
                    events,
                    empirical: p,
                    bound: bound(lambda),
                    stderr: (p * (1.0 - p) / trials as f64).sqrt(),
                }
            })
            .collect();
        let (fitted_rate, r_squared) = fit_rate(&rows, scale);
        TailReport {
            trials,
            rows,
            scale,
            fitted_rate,
            r_squared,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].empirical <= w[0].empirical)
    }

    /// Rows where the empirical value exceeds the bound by more than
    /// `sigmas` standard errors.
    pub fn violations(&self, sigmas: f64) -> Vec<&TailRow> {
        self.rows
            .iter()
            .filter(|r| r.bound.is_some_and(|b| r.empirical > b + sigmas * r.stderr))
            .collect()
    }

    /// Rows with too few events for a tight estimate.
    pub fn low_confidence(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.events < MIN_EVENTS)
            .map(|r| r.lambda)
            .collect()
    }

    /// `lambda,empirical,bound,stderr`; rows without a bound leave it empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "empirical", "bound", "stderr"])?;
        for r in &self.rows {
            w.write_record([
                r.lambda.to_string(),
                r.empirical.to_string(),
                r.bound.map(|b| b.to_string()).unwrap_or_default(),
                r.stderr.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// A gnuplot script plotting the CSV written by [`Self::write_csv`].
    pub fn gnuplot_script(&self, csv_path: &str, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set logscale y");
        let _ = writeln!(s, "set xlabel 'lambda'");
        let _ = writeln!(s, "set ylabel 'tail probability'");
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(
            s,
            "plot '{csv_path}' using 1:2:4 with yerrorbars title 'empirical', \\\n     '{csv_path}' using 1:3 with lines title 'bound'"
        );
        s
    }
}

/// Least-squares fit of `ln p = c - a lambda^2 / scale` over rows with
/// `lambda > 0` and at least [`MIN_EVENTS`] events; returns `(a, R^2)`.
fn fit_rate(rows: &[TailRow], scale: f64) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.lambda > 0.0 && r.events >= MIN_EVENTS && r.empirical < 1.0)
        .map(|r| (r.lambda * r.lambda / scale, r.empirical.ln()))
        .collect();
    if pts.len() < 3 {
        return (None, None);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let Ok((slope, intercept)) = crate::kdist::least_squares(&xs, &ys) else {
        return (None, None);
    };
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (Some(-slope), Some(r2))
}

/// Simple random walk `X_m` with `+-1` steps; reports `Pr[X_m > lambda sqrt(m)]`
/// against `exp(-lambda^2 / 2)` (the `lambda = 0` row has no bound).
pub fn martingale_tail_check(m: usize, cfg: SamplerConfig, grid: &[f64]) -> Result<TailReport> {
    if m == 0 {
        return Err(Error::input("the walk needs at least one step"));
    }
    let thresholds: Vec<f64> = grid.iter().map(|l| l * (m as f64).sqrt()).collect();
    let chunks = cfg.run(|rng, quota| {
        let mut counts = vec![0u64; grid.len()];
        for _ in 0..quota {
            let mut ups = 0i64;
            let mut left = m;
            while left > 0 {
                let take = left.min(64);
                let word = rng.next_u64();
                let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
                ups += (word & mask).count_ones() as i64;
                left -= take;
            }
            let x = (2 * ups - m as i64) as f64;
            for (c, t) in counts.iter_mut().zip(&thresholds) {
                if x > *t {
                    *c += 1;
                }
            }
        }
        Ok(counts)
    })?;
    let counts = merge(chunks, grid.len());
    Ok(TailReport::from_counts(
        cfg.trials,
        grid,
        &counts,
        |l| if l > 0.0 { azuma_bound(l).ok() } else { None },
        1.0,
    ))
}

fn merge(chunks: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for c in chunks {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    out
}

/// Tuple structure of `A_{>=1}` laid out as indices `0..n'`, block by block.
#[derive(Clone, Debug)]
struct TupleBlocks {
    k: usize,
    /// Block size `s` of each tuple.
    size: Vec<usize>,
    tuple_of: Vec<usize>,
}

impl TupleBlocks {
    fn new(promise: &Promise) -> Self {
        let mut size = Vec::new();
        let mut tuple_of = Vec::new();
        for s in 1..promise.k {
            for _ in 0..promise.get(s) {
                for _ in 0..s {
                    tuple_of.push(size.len());
                }
                size.push(s);
            }
        }
        TupleBlocks {
            k: promise.k,
            size,
            tuple_of,
        }
    }

    fn n_prime(&self) -> usize {
        self.tuple_of.len()
    }

    fn type_of(&self, indices: impl Iterator<Item = usize>, scratch: &mut Vec<usize>) -> TypeMatrix {
        scratch.clear();
        scratch.resize(self.size.len(), 0);
        for i in indices {
            scratch[self.tuple_of[i]] += 1;
        }
        let mut ty = TypeMatrix::zero(self.k);
        for (tuple, &c) in scratch.iter().enumerate() {
            if c > 0 {
                let s = self.size[tuple];
                ty.set(c, s, ty.get(c, s) + 1);
            }
        }
        ty
    }

    /// Uniform subset with specification `spec`, by rejection.
    fn sample_with_spec<R: Rng>(&self, rng: &mut R, spec: &Specification, scratch: &mut Vec<usize>) -> Result<TypeMatrix> {
        let r = spec.size();
        for _ in 0..REJECTION_CAP {
            let s = sample(rng, self.n_prime(), r);
            let ty = self.type_of(s.into_iter(), scratch);
            if ty.specification() == *spec {
                return Ok(ty);
            }
        }
        Err(Error::Sampler(format!(
            "{REJECTION_CAP} consecutive draws missed specification {spec}; try a smaller instance or a more likely specification"
        )))
    }
}

fn check_spec(promise: &Promise, spec: &Specification) -> Result<()> {
    if spec.k() != promise.k {
        return Err(Error::input("specification and promise disagree on k"));
    }
    if spec.size() > promise.n_prime() {
        return Err(Error::input(format!("{spec} needs more than n' = {} indices", promise.n_prime())));
    }
    if count_by_specification(promise, spec)?.is_zero() {
        return Err(Error::input(format!("no subset of the tuple blocks satisfies {spec}")));
    }
    Ok(())
}

/// Mean type over all subsets of `A_{>=1}` with the given specification,
/// weighted by the exact per-type subset counts.
pub fn exact_mean_type(promise: &Promise, spec: &Specification) -> Result<Vec<BigRational>> {
    check_spec(promise, spec)?;
    let types = types_for_spec(promise, spec)?;
    let len = promise.k * (promise.k - 1);
    let mut sums = vec![BigInt::zero(); len];
    let mut total = BigInt::zero();
    for ty in types {
        let c = BigInt::from(count_by_type(promise, &ty)?);
        for (s, &e) in sums.iter_mut().zip(ty.entries()) {
            *s += &c * BigInt::from(e);
        }
        total += c;
    }
    Ok(sums.into_iter().map(|s| BigRational::new(s, total.clone())).collect())
}

/// Specification of largest count among subsets of size `r`.
pub fn modal_spec(promise: &Promise, r: usize) -> Result<Specification> {
    let mut best: Option<(num::BigUint, Specification)> = None;
    for s in specs_of_size(promise.k, r) {
        let c = count_by_specification(promise, &s)?;
        if best.as_ref().is_none_or(|(b, _)| c > *b) {
            best = Some((c, s));
        }
    }
    best.map(|b| b.1)
        .ok_or_else(|| Error::input(format!("no specification of size {r}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanTypeReport {
    /// Entries in [`TypeMatrix::entries`] order.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Exact mean, when the promise is small enough to enumerate.
    pub exact: Option<Vec<BigRational>>,
    pub samples: u64,
}

impl MeanTypeReport {
    /// Largest `|mean - exact| / stderr` over entries with positive stderr;
    /// entries with zero stderr must match exactly or count as infinite.
    pub fn max_z_score(&self) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        Some(
            self.mean
                .iter()
                .zip(&self.stderr)
                .zip(exact)
                .map(|((m, s), e)| {
                    let d = (m - e.to_f64().unwrap_or(f64::NAN)).abs();
                    if *s > 0.0 {
                        d / s
                    } else if d < 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max),
        )
    }
}

/// Monte Carlo mean type over uniform subsets with specification `spec`,
/// with the exact mean when `n' <= 12`.
pub fn estimate_mean_type(promise: &Promise, spec: &Specification, cfg: SamplerConfig) -> Result<MeanTypeReport> {
    check_spec(promise, spec)?;
    let blocks = TupleBlocks::new(promise);
    let len = promise.k * (promise.k - 1);
    let chunks = cfg.run(|rng, quota| {
        let mut scratch = Vec::new();
        let mut sum = vec![0.0; len];
        let mut sq = vec![0.0; len];
        for _ in 0..quota {
            let ty = blocks.sample_with_spec(rng, spec, &mut scratch)?;
            for ((s, q), &e) in sum.iter_mut().zip(sq.iter_mut()).zip(ty.entries()) {
                *s += e as f64;
                *q += (e * e) as f64;
            }
        }
        Ok((sum, sq))
    })?;
    let mut sum = vec![0.0; len];
    let mut sq = vec![0.0; len];
    for (s, q) in chunks {
        for i in 0..len {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let n = cfg.trials as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = mean
        .iter()
        .zip(&sq)
        .map(|(m, q)| {
            let var = if n > 1.0 { ((q / n - m * m) * n / (n - 1.0)).max(0.0) } else { 0.0 };
            (var / n).sqrt()
        })
        .collect();
    let exact = if promise.n_prime() <= 12 {
        Some(exact_mean_type(promise, spec)?)
    } else {
        None
    };
    Ok(MeanTypeReport {
        mean,
        stderr,
        exact,
        samples: cfg.trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubtupleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Monte Carlo count of `t`-subtuples in a uniform `r`-subset of `A_{>=1}`.
pub fn estimate_subtuples(promise: &Promise, r: usize, t: usize, cfg: SamplerConfig) -> Result<SubtupleEstimate> {
    if t == 0 || t >= promise.k {
        return Err(Error::input(format!("t = {t} outside 1..{}", promise.k - 1)));
    }
    if r > promise.n_prime() {
        return Err(Error::input(format!("r = {r} exceeds n' = {}", promise.n_prime())));
    }
    let blocks = TupleBlocks::new(promise);
    let chunks = cfg.run(|rng, quota| {
        let mut hits = vec![0usize; blocks.size.len()];
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..quota {
            hits.iter_mut().for_each(|h| *h = 0);
            for i in sample(rng, blocks.n_prime(), r) {
                hits[blocks.tuple_of[i]] += 1;
            }
            let c = hits.iter().filter(|&&h| h == t).count() as f64;
            sum += c;
            sq += c * c;
        }
        Ok((sum, sq))
    })?;
    let (sum, sq) = chunks.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = cfg.trials as f64;
    let mean = sum / n;
    let var = if n > 1.0 { ((sq / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(SubtupleEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples: cfg.trials,
    })
}

/// Tail of the `l_inf` distance between the type of a uniform subset with
/// specification `spec` and the exact mean type, against `lambda`. The fit
/// is `exp(-a lambda^2 / r)` with `r = |spec|`.
pub fn type_deviation_tail(promise: &Promise, spec: &Specification, cfg: SamplerConfig, grid: &[f64]) -> Result<TailReport> {
    let eps: Vec<f64> = exact_mean_type(promise, spec)?
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN))
        .collect();
    let blocks = TupleBlocks::new(promise);
    let chunks = cfg.run(|rng, quota| {
        let mut scratch = Vec::new();
        let mut counts = vec![0u64; grid.len()];
        for _ in 0..quota {
            let ty = blocks.sample_with_spec(rng, spec, &mut scratch)?;
            let dev = ty
                .entries()
                .iter()
                .zip(&eps)
                .map(|(&e, m)| (e as f64 - m).abs())
                .fold(0.0, f64::max);
            for (c, l) in counts.iter_mut().zip(grid) {
                if dev > *l {
                    *c += 1;
                }
            }
        }
        Ok(counts)
    })?;
    let counts = merge(chunks, grid.len());
    Ok(TailReport::from_counts(cfg.trials, grid, &counts, |_| None, spec.size() as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRatioReport {
    /// Preparation rounds walked.
    pub rounds: usize,
    pub samples: u64,
    /// Distinct key-vertex types reached.
    pub distinct_types: usize,
    /// Same-specification pairs compared.
    pub pairs: usize,
    /// Largest `|ln(p_S / p_S')|` per type distance `d`.
    pub max_log_ratio: BTreeMap<usize, f64>,
    /// Smallest `c` with `|ln(p_S / p_S')| <= c d r_2 / n` on every pair.
    pub fitted_c: Option<f64>,
    /// Exponent `g` of a log-log fit `max_log_ratio(d) ~ d^g`.
    pub growth_exponent: Option<f64>,
    /// Largest flow ratio among types within `sqrt(r_1)` of the mean type
    /// of their specification.
    pub typical_band: Option<f64>,
    /// Whether any two samples of one type disagreed on the flow.
    pub same_type_mismatch: bool,
}

impl FlowRatioReport {
    pub fn insufficient_data(&self) -> bool {
        self.pairs == 0 || self.max_log_ratio.len() < 2
    }
}

/// Walks key vertices of the staged construction at the type level: a
/// uniform valid subset after the first stage, then at each round a
/// uniformly chosen fresh subtuple. Each reached type gets its flow from
/// [`KeyFlowModel`]; same-specification pairs are compared.
pub fn key_flow_ratio_check(schedule: &Schedule, promise: &Promise, cfg: SamplerConfig) -> Result<FlowRatioReport> {
    let mut model = KeyFlowModel::new(schedule.clone(), promise.clone())?;
    let rounds = model.rounds();
    let params = schedule.params();
    let k = promise.k;
    let r1 = params.r(1);
    if r1 > promise.n_prime() {
        return Err(Error::input("r_1 exceeds the tuple indices"));
    }
    let blocks = TupleBlocks::new(promise);
    let sizes: Vec<usize> = (1..=rounds).map(|t| model.round_size(t)).collect();
    let chunks = cfg.run(|rng, quota| {
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(quota as usize);
        for _ in 0..quota {
            let mut ty = None;
            for _ in 0..REJECTION_CAP {
                let s = sample(rng, blocks.n_prime(), r1);
                let t = blocks.type_of(s.into_iter(), &mut scratch);
                if schedule.is_valid_original(&t.specification()) {
                    ty = Some(t);
                    break;
                }
            }
            let mut ty = ty.ok_or_else(|| Error::Sampler("the first stage almost never ends on a valid vertex".into()))?;
            for &i in &sizes {
                let weights: Vec<u64> = (1..k)
                    .map(|s| {
                        if s < i {
                            return 0;
                        }
                        let used: usize = (1..k).map(|t| ty.get(t, s)).sum();
                        (promise.get(s) - used) as u64 * binomial(s as u64, i as u64).to_u64().unwrap()
                    })
                    .collect();
                let total: u64 = weights.iter().sum();
                if total == 0 {
                    return Err(Error::Construction(format!("a key vertex of type {ty} has no fresh {i}-subtuple")));
                }
                let mut pick = rng.random_range(0..total);
                let mut col = 0;
                while pick >= weights[col] {
                    pick -= weights[col];
                    col += 1;
                }
                let s = col + 1;
                ty.set(i, s, ty.get(i, s) + 1);
            }
            out.push(ty);
        }
        Ok(out)
    })?;

    let mut counts: HashMap<TypeMatrix, u64> = HashMap::new();
    for ty in chunks.into_iter().flatten() {
        *counts.entry(ty).or_default() += 1;
    }
    let mut by_spec: BTreeMap<Specification, Vec<(TypeMatrix, f64)>> = BTreeMap::new();
    let mut types: Vec<&TypeMatrix> = counts.keys().collect();
    types.sort();
    let mut same_type_mismatch = false;
    for ty in types {
        let p = model.flow(rounds, ty)?;
        // a second evaluation must agree bit for bit
        same_type_mismatch |= model.flow(rounds, ty)? != p;
        by_spec.entry(ty.specification()).or_default().push((ty.clone(), p));
    }

    let scale = params.r(2.min(k - 1)) as f64 / params.n as f64;
    let mut max_log_ratio: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pairs = 0;
    let mut typical_band: Option<f64> = None;
    for (spec, list) in &by_spec {
        for a in 0..list.len() {
            for b in a + 1..list.len() {
                let d = type_distance(&list[a].0, &list[b].0)?;
                let lr = (list[a].1.ln() - list[b].1.ln()).abs();
                pairs += 1;
                let e = max_log_ratio.entry(d).or_insert(0.0);
                *e = e.max(lr);
            }
        }
        let eps: Vec<f64> = exact_mean_type(promise, spec)?
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect();
        let radius = (r1 as f64).sqrt();
        let typical: Vec<f64> = list
            .iter()
            .filter(|(ty, _)| {
                ty.entries()
                    .iter()
                    .zip(&eps)
                    .all(|(&e, m)| (e as f64 - m).abs() <= radius)
            })
            .map(|(_, p)| *p)
            .collect();
        if typical.len() >= 2 {
            let hi = typical.iter().cloned().fold(f64::MIN, f64::max);
            let lo = typical.iter().cloned().fold(f64::MAX, f64::min);
            let band = hi / lo;
            typical_band = Some(typical_band.map_or(band, |b: f64| b.max(band)));
        }
    }
    let fitted_c = max_log_ratio
        .iter()
        .filter(|(d, _)| **d > 0)
        .map(|(d, v)| v / (*d as f64 * scale))
        .reduce(f64::max);
    let growth: Vec<(f64, f64)> = max_log_ratio
        .iter()
        .filter(|(d, v)| **d > 0 && **v > 0.0)
        .map(|(d, v)| ((*d as f64).ln(), v.ln()))
        .collect();
    let growth_exponent = if growth.len() >= 2 {
        let xs: Vec<f64> = growth.iter().map(|g| g.0).collect();
        let ys: Vec<f64> = growth.iter().map(|g| g.1).collect();
        crate::kdist::least_squares(&xs, &ys).ok().map(|(b, _)| b)
    } else {
        None
    };
    Ok(FlowRatioReport {
        rounds,
        samples: cfg.trials,
        distinct_types: counts.len(),
        pairs,
        max_log_ratio,
        fitted_c,
        growth_exponent,
        typical_band,
        same_type_mismatch,
    })
}
