//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use learning_graph::domain::Subset;
use learning_graph::graph::{GraphBuilder, LearningGraph, VertexId};
use learning_graph::complexity::{complexity_and_flows_exact, complexity_with_flows};
use learning_graph::domain::{Assignment, CubeIter, Domain, FunctionSpec, InputPoint};
use learning_graph::flow::{condition_flow, flow_cost_realized, validate_flow_realized, Flow};
use learning_graph::graph::build_layered_graph;
use learning_graph::kdist::Promise;
use learning_graph::symmetry::{group_elements, symmetrize, GroupMode};
use learning_graph::weights::WeightTable;
use num::Zero;
use rand_chacha::ChaCha8Rng;
use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational};
use rand::Rng;

/// Random subgraph of the subset lattice on `[n]` containing the root, with
/// at most `max_arcs` arcs.
pub fn random_layered_graph<R: Rng>(rng: &mut R, n: usize, max_arcs: usize) -> LearningGraph {
    let mut b = GraphBuilder::new(n).unwrap();
    let mut vertices = vec![Subset::EMPTY];
    for bits in 1u64..(1 << n) {
        if rng.random_bool(0.6) {
            vertices.push(Subset::from_bits(bits));
        }
    }
    for &s in &vertices {
        b.add_vertex(s).unwrap();
    }
    let mut candidates = Vec::new();
    for &s in &vertices {
        for j in (0..n).filter(|&j| !s.contains(j)) {
            if vertices.contains(&s.with(j)) {
                candidates.push((s, j));
            }
        }
    }
    // shuffle, then keep a prefix
    for i in (1..candidates.len()).rev() {
        let j = rng.random_range(0..=i);
        candidates.swap(i, j);
    }
    let keep = rng.random_range(1..=max_arcs.min(candidates.len()).max(1));
    for &(s, j) in candidates.iter().take(keep) {
        b.add_arc(s, j).unwrap();
    }
    b.build().unwrap()
}

/// Minimum of `sum p_e^2 / w_e` over unit flows from the root that conserve
/// at every non-accepting vertex, by solving the KKT system over arc
/// variables with a pseudo-inverse. `None` when the constraints are
/// inconsistent (no unit flow exists).
pub fn kkt_min_cost(g: &LearningGraph, weights: &[f64], accepting: &[bool]) -> Option<(Vec<f64>, f64)> {
    let e = g.num_arcs();
    let rows: Vec<VertexId> = (0..g.num_vertices()).filter(|&v| v == g.root() || !accepting[v]).collect();
    let c = rows.len();
    let mut k = DMatrix::<f64>::zeros(e + c, e + c);
    let mut rhs = DVector::<f64>::zeros(e + c);
    for a in 0..e {
        k[(a, a)] = 2.0 / weights[a];
    }
    for (r, &v) in rows.iter().enumerate() {
        // outflow - inflow = [v is root]
        for &a in g.out_arcs(v) {
            k[(e + r, a)] += 1.0;
            k[(a, e + r)] += 1.0;
        }
        for &a in g.in_arcs(v) {
            k[(e + r, a)] -= 1.0;
            k[(a, e + r)] -= 1.0;
        }
        if v == g.root() {
            rhs[e + r] = 1.0;
        }
    }
    let svd = k.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-10).ok()?;
    if (&k * &sol - &rhs).amax() > 1e-8 {
        return None;
    }
    let p: Vec<f64> = sol.iter().take(e).copied().collect();
    let cost = p.iter().zip(weights).map(|(p, w)| p * p / w).sum();
    Some((p, cost))
}

/// A random nonnegative unit flow: a convex mixture of random root-to-sink
/// paths (following arcs forward), when some accepting vertex is reachable.
pub fn random_path_flow<R: Rng>(rng: &mut R, g: &LearningGraph, accepting: &[bool], paths: usize) -> Option<Vec<f64>> {
    let mut values = vec![0.0; g.num_arcs()];
    let mut total = 0.0;
    let mut found = Vec::new();
    for _ in 0..paths * 20 {
        if found.len() == paths {
            break;
        }
        let mut v = g.root();
        let mut used = Vec::new();
        loop {
            if accepting[v] && (g.out_arcs(v).is_empty() || rng.random_bool(0.5)) {
                found.push(used);
                break;
            }
            let outs = g.out_arcs(v);
            if outs.is_empty() {
                break;
            }
            let a = outs[rng.random_range(0..outs.len())];
            used.push(a);
            v = g.arc(a).target;
        }
    }
    if found.is_empty() {
        return None;
    }
    for path in &found {
        let share: f64 = rng.random_range(0.1..1.0);
        total += share;
        for &a in path {
            values[a] += share;
        }
    }
    for v in &mut values {
        *v /= total;
    }
    Some(values)
}

/// Subset counts of `A_{>=1}` by specification, by listing all `2^{n'}`
/// subsets. Also returns, per `(r, t)`, the total number of `t`-subtuples
/// over all `r`-subsets.
pub struct Enumeration {
    pub by_spec: HashMap<Vec<usize>, u64>,
    pub subtuples: HashMap<(usize, usize), u64>,
    pub subsets_of_size: Vec<u64>,
}

pub fn enumerate_promise(p: &Promise) -> Enumeration {
    let mut tuple_of = Vec::new();
    let mut tuples = 0;
    for s in 1..p.k {
        for _ in 0..p.get(s) {
            tuple_of.extend(std::iter::repeat_n(tuples, s));
            tuples += 1;
        }
    }
    let np = tuple_of.len();
    assert!(np <= 20);
    let mut out = Enumeration {
        by_spec: HashMap::new(),
        subtuples: HashMap::new(),
        subsets_of_size: vec![0; np + 1],
    };
    let mut hits = vec![0usize; tuples];
    for mask in 0u32..(1 << np) {
        hits.iter_mut().for_each(|h| *h = 0);
        for (i, &t) in tuple_of.iter().enumerate() {
            if mask >> i & 1 == 1 {
                hits[t] += 1;
            }
        }
        let mut spec = vec![0usize; p.k - 1];
        for &h in &hits {
            if h > 0 {
                spec[h - 1] += 1;
            }
        }
        let r = mask.count_ones() as usize;
        out.subsets_of_size[r] += 1;
        for t in 1..p.k {
            *out.subtuples.entry((r, t)).or_default() += spec[t - 1] as u64;
        }
        *out.by_spec.entry(spec).or_default() += 1;
    }
    out
}

/// Every promise with `n' <= max` for this `k`.
pub fn promises_up_to(k: usize, max: usize) -> Vec<Promise> {
    fn rec(s: usize, k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Promise>) {
        if s == k {
            out.push(Promise::new(k, cur.clone()).unwrap());
            return;
        }
        for l in 0..=left / s {
            cur.push(l);
            rec(s + 1, k, left - l * s, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, k, max, &mut Vec::new(), &mut out);
    out
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(rng.random_range(lo..=hi)), BigInt::from(rng.random_range(1..=den)))
}

/// One conditioning instance: full lattice on `[n]` to depth `d`, sinks at
/// depth `d`, a random rational path mixture and a random kept set.
pub fn conditioning_instance(rng: &mut ChaCha8Rng) -> (BigRational, BigRational, BigRational) {
    let n = rng.random_range(3..=5);
    let d = rng.random_range(1..=n.min(3));
    let g = build_layered_graph(n, d, |_| true, 1000).unwrap();
    let weights: Vec<BigRational> = (0..g.num_arcs()).map(|_| rational(rng, 1, 9, 4)).collect();
    let mut values = vec![BigRational::zero(); g.num_arcs()];
    let mut total = BigRational::zero();
    for _ in 0..rng.random_range(1..=6) {
        let share = rational(rng, 1, 5, 3);
        let mut s = Subset::EMPTY;
        for _ in 0..d {
            let free: Vec<usize> = (0..n).filter(|&j| !s.contains(j)).collect();
            let j = free[rng.random_range(0..free.len())];
            values[g.find_arc(s, j).unwrap()] += &share;
            s = s.with(j);
        }
        total += share;
    }
    for v in &mut values {
        *v /= &total;
    }
    let sinks: Vec<usize> = (0..g.num_vertices()).filter(|&v| g.vertex(v).len() == d).collect();
    let reached: Vec<usize> = sinks
        .iter()
        .copied()
        .filter(|&v| g.in_arcs(v).iter().any(|&e| !values[e].is_zero()))
        .collect();
    let mut keep: Vec<usize> = reached.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    if keep.is_empty() {
        keep.push(reached[rng.random_range(0..reached.len())]);
    }
    let kept_mass: BigRational = keep
        .iter()
        .flat_map(|&v| g.in_arcs(v).iter().map(|&e| values[e].clone()))
        .sum();
    let x = InputPoint::new(vec![1; n]).unwrap();
    let flow = Flow { input: x, values };
    let conditioned = condition_flow(&g, &flow, &sinks, &keep).unwrap();
    let mut accepting = vec![false; g.num_vertices()];
    keep.iter().for_each(|&v| accepting[v] = true);
    let report = validate_flow_realized(&g, &weights, &accepting, &conditioned.values).unwrap();
    assert!(report.is_exact(), "conditioned flow is not an exact unit flow into the kept sinks");
    let before = flow_cost_realized(&weights, &flow.values).unwrap();
    let after = flow_cost_realized(&weights, &conditioned.values).unwrap();
    (before, after, kept_mass)
}

/// Random positive rational weights on every origin assignment.
pub fn random_rational_table(rng: &mut ChaCha8Rng, g: &LearningGraph, m: u32) -> WeightTable<BigRational> {
    let mut table = WeightTable::new();
    for e in 0..g.num_arcs() {
        let origin = g.arc_view(e).origin;
        let assignments: Vec<Vec<u32>> = if origin.is_empty() {
            vec![Vec::new()]
        } else {
            CubeIter::new(origin.len(), m).map(|x| x.values().to_vec()).collect()
        };
        for vals in assignments {
            let alpha = Assignment::new(origin, vals).unwrap();
            table.insert(e, &alpha, rational(rng, 1, 8, 3));
        }
    }
    table
}

/// `(N P before, N P after)` for one random weighting.
pub fn symmetrization_instance(rng: &mut ChaCha8Rng) -> (BigRational, BigRational) {
    let n = rng.random_range(2..=3);
    let m = rng.random_range(2..=3);
    let g = build_layered_graph(n, n, |_| true, 1000).unwrap();
    let f = FunctionSpec::element_distinctness(n, m).unwrap();
    let domain = Domain::cube(&f, 1000).unwrap();
    let table = random_rational_table(rng, &g, m);
    let (before, flows) = complexity_and_flows_exact(&g, &table, &domain).unwrap();
    let group = group_elements(n, m, GroupMode::Full { cap: 1000 }).unwrap();
    let (averaged, averaged_flows) = symmetrize(&g, &table, &flows, &domain, &group).unwrap();
    let after = complexity_with_flows(&g, &averaged, &domain, &averaged_flows, 0.0).unwrap();
    (before.total_squared(), after.total_squared())
}

