//! Library results against independent brute-force oracles.

mod common;

use std::collections::HashMap;

use common::{
    conditioning_instance, enumerate_promise, kkt_min_cost, promises_up_to, random_layered_graph, random_path_flow,
    ratio, symmetrization_instance,
};
use learning_graph::concentration::{estimate_mean_type, exact_mean_type, SamplerConfig};
use learning_graph::domain::Subset;
use learning_graph::flow::{flow_cost_realized, optimal_flow_realized, validate_flow_realized};
use learning_graph::graph::GraphBuilder;
use learning_graph::kdist::{count_by_specification, expected_subtuples, specs_of_size, Promise};
use learning_graph::symmetry::{Specification, TypeMatrix};
use learning_graph::Error;
use num::{BigInt, BigRational, BigUint, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn flow_solver_matches_quadratic_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    let mut infeasible = 0;
    while compared < 200 {
        let n = rng.random_range(2..=4);
        let g = random_layered_graph(&mut rng, n, 12);
        assert!(g.num_arcs() <= 12);
        let weights: Vec<f64> = (0..g.num_arcs()).map(|_| rng.random_range(0.1..10.0)).collect();
        let mut accepting: Vec<bool> = (0..g.num_vertices()).map(|_| rng.random_bool(0.3)).collect();
        accepting[g.root()] = false;
        let oracle = kkt_min_cost(&g, &weights, &accepting);
        match (optimal_flow_realized(&g, &weights, &accepting), oracle) {
            (Ok((values, cost)), Some((expected_values, expected))) => {
                assert!((cost - expected).abs() <= 1e-9, "cost {cost} vs oracle {expected}");
                for (a, b) in values.iter().zip(&expected_values) {
                    assert!((a - b).abs() <= 1e-7);
                }
                let report = validate_flow_realized(&g, &weights, &accepting, &values).unwrap();
                assert!(report.is_clean(1e-9));
                assert!(report.negative_absorptions(1e-9).is_empty());
                assert!((flow_cost_realized(&weights, &values).unwrap() - cost).abs() <= 1e-9);
                compared += 1;
            }
            (Err(Error::Infeasible(_)), None) => infeasible += 1,
            (got, want) => panic!("solver {got:?} disagrees with oracle {want:?}"),
        }
    }
    assert!(infeasible > 0, "no infeasible instance was exercised");
}

#[test]
fn asymmetric_parallel_paths() {
    // one arc straight into a sink, beside a two-arc path into another
    let mut b = GraphBuilder::new(2).unwrap();
    for s in ["-", "1", "2", "1,2"] {
        b.add_vertex(s.parse().unwrap()).unwrap();
    }
    b.add_arc(Subset::EMPTY, 0).unwrap();
    b.add_arc(Subset::EMPTY, 1).unwrap();
    b.add_arc(Subset::from_indices([1]), 0).unwrap();
    let g = b.build().unwrap();
    let mut accepting = vec![false; g.num_vertices()];
    accepting[g.vertex_id(Subset::from_indices([0])).unwrap()] = true;
    accepting[g.vertex_id(Subset::from_indices([0, 1])).unwrap()] = true;
    let (_, cost) = optimal_flow_realized(&g, &[1.0; 3], &accepting).unwrap();
    assert!((cost - 2.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn optimum_beats_random_feasible_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut instances = 0;
    while instances < 30 {
        let g = random_layered_graph(&mut rng, 4, 12);
        let weights: Vec<f64> = (0..g.num_arcs()).map(|_| rng.random_range(0.1..10.0)).collect();
        let mut accepting: Vec<bool> = (0..g.num_vertices()).map(|_| rng.random_bool(0.4)).collect();
        accepting[g.root()] = false;
        let Ok((_, best)) = optimal_flow_realized(&g, &weights, &accepting) else { continue };
        let mut tried = 0;
        for _ in 0..400 {
            let paths = rng.random_range(1..=4);
            let Some(values) = random_path_flow(&mut rng, &g, &accepting, paths) else { break };
            let report = validate_flow_realized(&g, &weights, &accepting, &values).unwrap();
            assert!(report.is_clean(1e-9));
            let cost = flow_cost_realized(&weights, &values).unwrap();
            assert!(cost >= best - 1e-12, "feasible flow costs {cost} below optimum {best}");
            tried += 1;
        }
        if tried >= 100 {
            instances += 1;
        }
    }
}

#[test]
fn specification_counts_match_enumeration() {
    for k in 2..=13 {
        for p in promises_up_to(k, 12) {
            let e = enumerate_promise(&p);
            let mut seen = 0u64;
            for size in 0..=p.n_prime() {
                for spec in specs_of_size(k, size) {
                    let got = count_by_specification(&p, &spec).unwrap();
                    let want = e.by_spec.get(&spec.0).copied().unwrap_or(0);
                    assert_eq!(got, BigUint::from(want), "promise {:?} spec {spec}", p.ell);
                    seen += want;
                }
            }
            assert_eq!(seen, 1u64 << p.n_prime(), "specs_of_size missed subsets of {:?}", p.ell);
        }
    }
}

#[test]
fn subtuple_expectations_match_enumeration() {
    for k in 2..=6 {
        for p in promises_up_to(k, 12) {
            let e = enumerate_promise(&p);
            for r in 0..=p.n_prime() {
                for t in 1..k {
                    let got = expected_subtuples(&p, r, t).unwrap();
                    let total = e.subtuples.get(&(r, t)).copied().unwrap_or(0);
                    assert_eq!(got, ratio(total, e.subsets_of_size[r]), "{:?} r={r} t={t}", p.ell);
                }
            }
        }
    }
}

/// Mean type over subsets of the tuple blocks with a given specification,
/// by listing them.
fn enumerated_mean_types(p: &Promise) -> HashMap<Vec<usize>, Vec<BigRational>> {
    let k = p.k;
    let mut owner = Vec::new(); // (block size, tuple number)
    let mut id = 0;
    for s in 1..k {
        for _ in 0..p.get(s) {
            owner.extend(std::iter::repeat_n((s, id), s));
            id += 1;
        }
    }
    let mut sums: HashMap<Vec<usize>, (Vec<BigInt>, u64)> = HashMap::new();
    for mask in 0u32..(1 << owner.len()) {
        let mut hits = vec![(0usize, 0usize); id];
        for (i, &(s, t)) in owner.iter().enumerate() {
            if mask >> i & 1 == 1 {
                hits[t] = (s, hits[t].1 + 1);
            }
        }
        let mut ty = TypeMatrix::zero(k);
        for &(s, h) in &hits {
            if h > 0 {
                ty.set(h, s, ty.get(h, s) + 1);
            }
        }
        let entry = sums
            .entry(ty.specification().0)
            .or_insert_with(|| (vec![BigInt::zero(); ty.entries().len()], 0));
        for (a, &v) in entry.0.iter_mut().zip(ty.entries()) {
            *a += v;
        }
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(spec, (s, c))| (spec, s.into_iter().map(|v| BigRational::new(v, BigInt::from(c))).collect()))
        .collect()
}

#[test]
fn exact_mean_type_matches_enumeration() {
    for k in 2..=5 {
        for p in promises_up_to(k, 10) {
            for (spec, mean) in enumerated_mean_types(&p) {
                let got = exact_mean_type(&p, &Specification(spec.clone())).unwrap();
                assert_eq!(got, mean, "{:?} spec {spec:?}", p.ell);
            }
        }
    }
}

#[test]
fn sampled_mean_type_agrees_with_exact() {
    // many entries are compared, so a few 3-sigma excursions are expected
    let mut entries = 0;
    let mut beyond_three = 0;
    for (i, ell) in [vec![2, 2], vec![4, 3], vec![3, 1, 1], vec![6, 3]].into_iter().enumerate() {
        let p = Promise::new(ell.len() + 1, ell).unwrap();
        for size in 1..p.n_prime() {
            for spec in specs_of_size(p.k, size) {
                // the sampler rejects, so rare specifications are left out
                let count = count_by_specification(&p, &spec).unwrap();
                let all = learning_graph::combinatorics::binomial(p.n_prime() as u64, size as u64);
                if count * 50u32 < all {
                    continue;
                }
                let cfg = SamplerConfig::new(100 + i as u64 * 1000 + size as u64, 20_000).unwrap();
                let rep = estimate_mean_type(&p, &spec, cfg).unwrap();
                let exact = rep.exact.clone().expect("small promises are enumerated");
                for ((m, s), e) in rep.mean.iter().zip(&rep.stderr).zip(&exact) {
                    let e: f64 = num::ToPrimitive::to_f64(e).unwrap();
                    let z = if *s > 0.0 {
                        (m - e).abs() / s
                    } else if (m - e).abs() < 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    assert!(z <= 5.0, "{:?} spec {spec}: z = {z}", p.ell);
                    entries += 1;
                    if z > 3.0 {
                        beyond_three += 1;
                    }
                }
            }
        }
    }
    assert!(beyond_three * 100 <= entries, "{beyond_three} of {entries} entries beyond 3 sigma");
}

#[test]
fn conditioning_cost_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (before, after, t) = conditioning_instance(&mut rng);
        assert!(after <= before / (&t * &t));
    }
}

#[test]
fn symmetrization_never_increases_complexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut strict = 0;
    for _ in 0..50 {
        let (before, after) = symmetrization_instance(&mut rng);
        assert!(after <= before, "{after} > {before}");
        strict += (after < before) as usize;
    }
    // random weightings are almost never symmetric already
    assert!(strict > 0);
}
