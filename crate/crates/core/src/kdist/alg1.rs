//! The staged construction: an explicit version for tiny instances and a
//! class-level estimate for any `n`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num::{BigInt, BigRational, BigUint, One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::counting::{count_by_specification, d_function, flow_on_arc};
use super::schedule::{Schedule, StepLabel};
use super::{Promise, PromisedInstance};
use crate::combinatorics::{binomial, Combinations};
use crate::domain::{Assignment, Domain, InputPoint, Subset, SymmetryElement};
use crate::error::{Error, Result};
use crate::flow::{condition_flow, inflow, Flow};
use crate::graph::{build_layered_graph, ArcView, LearningGraph, VertexId};
use crate::symmetry::{transport_flow, ClassStats, Specification, TypeMatrix};
use crate::weights::{ExactWeights, WeightFunction};

/// Specification of a multiset of values; `None` when some value occurs `k`
/// or more times.
pub(crate) fn spec_of_values(values: &[u32], k: usize) -> Option<Specification> {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut b = vec![0; k - 1];
    for c in counts.into_values() {
        if c >= k {
            return None;
        }
        b[c - 1] += 1;
    }
    Some(Specification(b))
}

/// Weights of the staged construction: zero out of dead ends and accepting
/// vertices, otherwise a per-class value keyed by step and specification.
#[derive(Clone, Debug)]
pub struct Alg1Weights {
    k: usize,
    /// Admitted origin specifications per step; `None` admits all.
    valid: Vec<Option<HashSet<Specification>>>,
    class: HashMap<(usize, Specification), f64>,
    step_default: Vec<f64>,
}

impl Alg1Weights {
    pub fn new(
        schedule: &Schedule,
        class: HashMap<(usize, Specification), f64>,
        step_default: Vec<f64>,
    ) -> Result<Self> {
        let depth = schedule.depth();
        if step_default.len() != depth + 1 {
            return Err(Error::input("one default weight per step is needed"));
        }
        let mut valid = vec![None];
        for h in 1..=depth {
            valid.push(match schedule.label(h).unwrap() {
                StepLabel::FirstStage(_) => None,
                _ => Some(schedule.valid_specs_for_step(h)?.into_iter().collect()),
            });
        }
        Ok(Alg1Weights {
            k: schedule.params().k,
            valid,
            class,
            step_default,
        })
    }

    /// Class weight for step `h` (1-based), ignoring validity.
    pub fn class_weight(&self, h: usize, spec: &Specification) -> f64 {
        self.class
            .get(&(h, spec.clone()))
            .copied()
            .unwrap_or(self.step_default[h])
    }
}

impl WeightFunction for Alg1Weights {
    fn weight(&self, arc: &ArcView, alpha: &Assignment) -> Result<f64> {
        let h = arc.origin.len() + 1;
        if h >= self.valid.len() {
            return Ok(0.0);
        }
        let Some(spec) = spec_of_values(alpha.values(), self.k) else {
            return Ok(0.0);
        };
        if let Some(set) = &self.valid[h] {
            if !set.contains(&spec) {
                return Ok(0.0);
            }
        }
        Ok(self.class_weight(h, &spec))
    }
}

#[derive(Clone, Debug)]
pub struct Alg1Artifacts {
    pub schedule: Schedule,
    pub instance: PromisedInstance,
    pub graph: LearningGraph,
    pub domain: Domain,
    pub weights: Alg1Weights,
    /// Flows for every positive input of the domain, exact.
    pub flows: Vec<Flow<BigRational>>,
    /// Key vertices and their flow for the instance's own positive input:
    /// entry 0 after the first stage, then after each preparation round.
    pub key_flows: Vec<BTreeMap<Subset, BigRational>>,
    pub stats: Vec<ClassStats>,
}

/// Subsets of `set` of size `l`.
fn subsets_of(set: Subset, l: usize) -> impl Iterator<Item = Subset> {
    let idx: Vec<usize> = set.iter().collect();
    Combinations::new(idx.len(), l)
        .map(move |bits| Subset::from_indices(Subset::from_bits(bits).iter().map(|p| idx[p])))
}

fn add_flow(g: &LearningGraph, values: &mut [BigRational], origin: Subset, loaded: usize, v: &BigRational) -> Result<()> {
    let e = g.find_arc(origin, loaded).ok_or_else(|| {
        Error::Construction(format!("arc {origin} + {} is missing from the graph", loaded + 1))
    })?;
    values[e] += v;
    Ok(())
}

/// Rounds after the first stage: `(subtuple size, is last stage)`.
fn rounds(schedule: &Schedule) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    for &label in schedule.labels_in_order() {
        match label {
            StepLabel::Prep { i, l: 1, .. } => out.push((i, false)),
            StepLabel::LastStage(1) => out.push((schedule.params().k, true)),
            _ => {}
        }
    }
    out
}

/// Builds the staged construction on the full subset lattice of a tiny
/// promised instance, with the flow for the instance's positive input and
/// its images under `images - 1` seeded random symmetries.
pub fn build_alg1_tiny(
    schedule: Schedule,
    instance: &PromisedInstance,
    images: usize,
    seed: u64,
    vertex_cap: usize,
) -> Result<Alg1Artifacts> {
    let k = instance.k();
    let n = instance.n;
    if schedule.params().k != k || schedule.params().n != n {
        return Err(Error::input("schedule and instance disagree on k or n"));
    }
    if images == 0 {
        return Err(Error::input("at least one image of each input is needed"));
    }
    let depth = schedule.depth();
    if depth > n {
        return Err(Error::input(format!("the schedule has {depth} steps but n = {n}")));
    }
    let g = build_layered_graph(n, depth, |_| true, vertex_cap)?;
    let x = &instance.positive;
    let (base, key_flows) = staged_flow(&g, &schedule, instance)?;

    // class statistics from the base flow
    let mut sums: BTreeMap<(usize, Specification), (f64, usize)> = BTreeMap::new();
    for (e, v) in base.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let a = g.arc_view(e);
        let spec = spec_of_values(&x.restrict(a.origin), k)
            .ok_or_else(|| Error::Construction(format!("flow leaves accepting vertex {}", a.origin)))?;
        let entry = sums.entry((a.origin.len() + 1, spec)).or_insert((0.0, 0));
        entry.0 += v.to_f64().unwrap_or(0.0);
        entry.1 += 1;
    }
    let mut class = HashMap::new();
    let mut stats = Vec::new();
    let mut step_sum = vec![(0.0, 0usize); depth + 1];
    for ((h, spec), (sum, hits)) in &sums {
        let label = schedule.label(*h).unwrap();
        let tau = schedule.speciality(label);
        let pi = sum / *hits as f64;
        class.insert((*h, spec.clone()), pi / tau.sqrt());
        step_sum[*h].0 += pi / tau.sqrt();
        step_sum[*h].1 += 1;
        stats.push(ClassStats {
            key: format!("{label}:{spec}"),
            step: *h,
            pi,
            tau,
            mu: *sum,
            count: *hits as f64,
        });
    }
    let mut step_default = vec![0.0; depth + 1];
    for h in 1..=depth {
        let (s, c) = step_sum[h];
        if c == 0 {
            return Err(Error::Construction(format!("no flow crosses step {h}")));
        }
        step_default[h] = s / c as f64;
    }
    let weights = Alg1Weights::new(&schedule, class, step_default)?;

    let f = instance.function()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_flow = Flow {
        input: x.clone(),
        values: base,
    };
    let exact = ExactWeights(&weights);
    let mut seen: HashSet<InputPoint> = HashSet::new();
    let mut flows = Vec::new();
    let mut negatives = Vec::new();
    for i in 0..images {
        let sigma = if i == 0 {
            SymmetryElement::identity(n, instance.m)
        } else {
            SymmetryElement::random(n, instance.m, &mut rng)
        };
        let p = transport_flow(&g, &exact, &f, &sigma, &base_flow)?;
        if seen.insert(p.input.clone()) {
            flows.push(p);
        }
        let y = sigma.apply(&instance.negative)?;
        if seen.insert(y.clone()) {
            negatives.push(y);
        }
    }
    let domain = Domain::explicit(&f, flows.iter().map(|p| p.input.clone()).chain(negatives))?;
    Ok(Alg1Artifacts {
        schedule,
        instance: instance.clone(),
        graph: g,
        domain,
        weights,
        flows,
        key_flows,
        stats,
    })
}

type KeyMap = BTreeMap<Subset, BigRational>;

/// The staged flow for the instance's positive input.
fn staged_flow(g: &LearningGraph, schedule: &Schedule, inst: &PromisedInstance) -> Result<(Vec<BigRational>, Vec<KeyMap>)> {
    let k = inst.k();
    let x = &inst.positive;
    let r1 = schedule.params().r(1);
    let tuples = inst.layout.tuple_indices();
    let np = tuples.len();

    // first stage: uniform over the tuple blocks
    let mut first = Flow::zero(x.clone(), g.num_arcs());
    for size in 0..r1 {
        let share = BigRational::new(
            BigInt::one(),
            BigInt::from(binomial(np as u64, size as u64)) * BigInt::from(np - size),
        );
        for s in subsets_of(tuples, size) {
            for j in tuples.difference(s).iter() {
                add_flow(g, &mut first.values, s, j, &share)?;
            }
        }
    }
    let sinks: Vec<VertexId> = subsets_of(tuples, r1)
        .map(|s| g.vertex_id(s).expect("lattice vertex"))
        .collect();
    let keep: Vec<VertexId> = sinks
        .iter()
        .copied()
        .filter(|&v| {
            spec_of_values(&x.restrict(g.vertex(v)), k).is_some_and(|b| schedule.is_valid_original(&b))
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::Construction(
            "every vertex after the first stage is a dead end".into(),
        ));
    }
    let first = condition_flow(g, &first, &sinks, &keep)?;
    let mut values = first.values.clone();
    let mut keys: KeyMap = keep
        .iter()
        .map(|&v| (g.vertex(v), inflow(g, &first, v)))
        .collect();
    let mut history = vec![keys.clone()];

    let tuples_by_size: Vec<Vec<Subset>> = (0..k)
        .map(|s| if s == 0 { Vec::new() } else { inst.tuples_of(s) })
        .collect();
    for (i, last) in rounds(schedule) {
        let mut next: KeyMap = BTreeMap::new();
        for (key, p) in &keys {
            if last {
                let marked = inst.layout.marked();
                for l in 1..=k {
                    let share = flow_on_arc(p, k, k, l, 1)?;
                    for q in subsets_of(marked, l) {
                        for v in q.iter() {
                            add_flow(g, &mut values, key.union(q.without(v)), v, &share)?;
                        }
                    }
                }
                continue;
            }
            let z: Vec<usize> = (1..k)
                .map(|s| tuples_by_size[s].iter().filter(|t| !t.is_disjoint(*key)).count())
                .collect();
            let succ = d_function(&inst.promise, i, &z)?;
            if succ == 0 {
                return Err(Error::Construction(format!(
                    "key vertex {key} has no fresh {i}-subtuple to load"
                )));
            }
            let to_key = p / BigRational::from_integer(succ.into());
            for s in i..k {
                for t in tuples_by_size[s].iter().filter(|t| t.is_disjoint(*key)) {
                    for l in 1..=i {
                        let share = flow_on_arc(p, s, i, l, succ)?;
                        for q in subsets_of(*t, l) {
                            for v in q.iter() {
                                add_flow(g, &mut values, key.union(q.without(v)), v, &share)?;
                            }
                        }
                    }
                    for q in subsets_of(*t, i) {
                        *next.entry(key.union(q)).or_insert_with(BigRational::zero) += &to_key;
                    }
                }
            }
        }
        if !last {
            history.push(next.clone());
            keys = next;
        }
    }
    Ok((values, history))
}

/// Flow through key vertices as a function of their type, relative to the
/// flow through a vertex leaving the first stage. Round 0 is the end of the
/// first stage; round `t` follows the `t`-th preparation round.
#[derive(Clone, Debug)]
pub struct KeyFlowModel {
    promise: Promise,
    schedule: Schedule,
    round_sizes: Vec<usize>,
    memo: HashMap<(usize, TypeMatrix), f64>,
}

impl KeyFlowModel {
    pub fn new(schedule: Schedule, promise: Promise) -> Result<Self> {
        if schedule.params().k != promise.k {
            return Err(Error::input("schedule and promise disagree on k"));
        }
        let round_sizes = rounds(&schedule)
            .into_iter()
            .filter(|r| !r.1)
            .map(|r| r.0)
            .collect();
        Ok(KeyFlowModel {
            promise,
            schedule,
            round_sizes,
            memo: HashMap::new(),
        })
    }

    pub fn rounds(&self) -> usize {
        self.round_sizes.len()
    }

    /// Size of the subtuple loaded by round `t >= 1`.
    pub fn round_size(&self, t: usize) -> usize {
        self.round_sizes[t - 1]
    }

    /// `p(T, t) = sum_s b_{i,s} p(T - e_{i,s}, t-1) / D_i(z(T - e_{i,s}))`.
    pub fn flow(&mut self, round: usize, ty: &TypeMatrix) -> Result<f64> {
        if round > self.rounds() {
            return Err(Error::input(format!("round {round} beyond the {} preparation rounds", self.rounds())));
        }
        if let Some(v) = self.memo.get(&(round, ty.clone())) {
            return Ok(*v);
        }
        let k = self.promise.k;
        let value = if round == 0 {
            if self.schedule.is_valid_original(&ty.specification()) {
                1.0
            } else {
                0.0
            }
        } else {
            let i = self.round_size(round);
            let mut total = 0.0;
            for s in i..k {
                let b = ty.get(i, s);
                if b == 0 {
                    continue;
                }
                let mut prev = ty.clone();
                prev.set(i, s, b - 1);
                let z: Vec<usize> = (1..k).map(|c| (1..k).map(|t| prev.get(t, c)).sum()).collect();
                let d = d_function(&self.promise, i, &z)?;
                total += b as f64 * self.flow(round - 1, &prev)? / d as f64;
            }
            total
        };
        self.memo.insert((round, ty.clone()), value);
        Ok(value)
    }
}

/// One row of a class-level estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedRow {
    pub step: usize,
    pub label: String,
    /// Specification of the class, or `*` for a whole step.
    pub class: String,
    /// Vertices in the class, when counted.
    pub size: Option<BigUint>,
    pub speciality: f64,
    pub sqrt_t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedReport {
    pub rows: Vec<CollapsedRow>,
    /// `sum_i sqrt(T_i)` over steps.
    pub estimate: f64,
}

impl CollapsedReport {
    /// CSV `step,class,size,speciality,sqrtT`; unknown sizes are left empty.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "class", "size", "speciality", "sqrtT"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                r.class.clone(),
                r.size.as_ref().map(|s| s.to_string()).unwrap_or_default(),
                r.speciality.to_string(),
                r.sqrt_t.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-step specialities of the staged construction and, when a promise is
/// given, one row per admitted origin specification with its vertex count
/// (subsets of the tuple blocks, plus the marked elements already loaded in
/// the last stage). More than `class_cap` classes is a resource error.
pub fn collapsed_estimate(schedule: &Schedule, promise: Option<&Promise>, class_cap: usize) -> Result<CollapsedReport> {
    let k = schedule.params().k;
    let mut rows = Vec::new();
    let mut estimate = 0.0;
    for h in 1..=schedule.depth() {
        let label = schedule.label(h).unwrap();
        let tau = schedule.speciality(label);
        estimate += tau.sqrt();
        let Some(promise) = promise else {
            rows.push(CollapsedRow {
                step: h,
                label: label.to_string(),
                class: "*".into(),
                size: None,
                speciality: tau,
                sqrt_t: tau.sqrt(),
            });
            continue;
        };
        for spec in schedule.valid_specs_for_step(h)? {
            if rows.len() >= class_cap {
                return Err(Error::Resource(format!("more than {class_cap} classes")));
            }
            let size = match label {
                StepLabel::LastStage(j) if j >= 2 => {
                    let mut b = spec.clone();
                    b.0[j - 2] -= 1;
                    count_by_specification(promise, &b)? * binomial(k as u64, (j - 1) as u64)
                }
                _ => count_by_specification(promise, &spec)?,
            };
            rows.push(CollapsedRow {
                step: h,
                label: label.to_string(),
                class: spec.to_string(),
                size: Some(size),
                speciality: tau,
                sqrt_t: tau.sqrt(),
            });
        }
    }
    Ok(CollapsedReport { rows, estimate })
}
