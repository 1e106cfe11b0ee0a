//! Property tests for the invariants each module promises.

mod common;

use learning_graph::certificate::{build_certificate, objective_value, rescale_balance, verify_feasibility};
use learning_graph::complexity::{complexity_and_flows, complexity_and_flows_exact, complexity_with_flows, graph_complexity};
use learning_graph::concentration::{estimate_subtuples, martingale_tail_check, type_deviation_tail, modal_spec, SamplerConfig};
use learning_graph::domain::{Assignment, CubeIter, Domain, FunctionSpec, InputPoint, Subset, SymmetryElement};
use learning_graph::flow::{optimal_flow_exact, validate_flow, flow_cost, Flow};
use learning_graph::formats::GraphDocument;
use learning_graph::graph::{build_layered_graph, ArcView};
use learning_graph::kdist::{build_baseline_graph, build_promised_instance, expected_subtuples, Promise};
use learning_graph::symmetry::{group_elements, specification_of, symmetrize, transport_flow, type_of, GroupMode, VertexType};
use learning_graph::weights::{realize, ExactWeights, FnWeights, WeightTable};
use num::{BigInt, BigRational, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input_strategy(max_n: usize, max_m: u32) -> impl Strategy<Value = (usize, u32, Vec<u32>)> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| (Just(n), Just(m), prop::collection::vec(1..=m, n)))
}

/// Weight that depends on the arc only through its origin size and on the
/// values only through their multiplicity pattern, so it is symmetric.
fn symmetric_weight(arc: &ArcView, alpha: &Assignment) -> f64 {
    1.0 + arc.origin.len() as f64 * 0.5 + alpha.max_multiplicity() as f64
}

/// An arbitrary, non-symmetric local weight.
fn lopsided_weight(arc: &ArcView, alpha: &Assignment) -> f64 {
    let h: u32 = alpha.values().iter().sum::<u32>() + 3 * arc.loaded as u32 + arc.id as u32;
    0.25 + (h % 7) as f64
}

proptest! {
    #[test]
    fn evaluation_is_symmetric((n, m, x) in input_strategy(6, 4), k in 2usize..=4, seed: u64) {
        prop_assume!(k <= n);
        let f = FunctionSpec::k_distinctness(k, n, m).unwrap();
        let x = InputPoint::new(x).unwrap();
        let sigma = SymmetryElement::random(n, m, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(f.evaluate(&sigma.apply(&x).unwrap()).unwrap(), f.evaluate(&x).unwrap());
    }

    #[test]
    fn acceptance_is_monotone((n, m, x) in input_strategy(7, 3), k in 2usize..=3, a: u64, b: u64) {
        prop_assume!(k <= n);
        let f = FunctionSpec::k_distinctness(k, n, m).unwrap();
        let x = InputPoint::new(x).unwrap();
        let full = Subset::full(n).bits();
        let small = Subset::from_bits(a & full);
        let large = small.union(Subset::from_bits(b & full));
        if f.is_accepting(&x, small).unwrap() {
            prop_assert!(f.is_accepting(&x, large).unwrap());
        }
        prop_assert_eq!(f.evaluate(&x).unwrap(), f.is_accepting(&x, Subset::full(n)).unwrap());
    }

    #[test]
    fn table_functions_accept_at_the_full_set(n in 1usize..=3, m in 1u32..=3, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<bool> = (0..m.pow(n as u32)).map(|_| rng.random_bool(0.5)).collect();
        let f = FunctionSpec::truth_table(n, m, table).unwrap();
        for x in CubeIter::new(n, m) {
            prop_assert_eq!(f.evaluate(&x).unwrap(), f.is_accepting(&x, Subset::full(n)).unwrap());
        }
    }

    #[test]
    fn subset_and_assignment_text_round_trip((n, _m, x) in input_strategy(64, 9), bits: u64) {
        let s = Subset::from_bits(bits & Subset::full(n).bits());
        prop_assert_eq!(s.to_string().parse::<Subset>().unwrap(), s);
        let x = InputPoint::new(x).unwrap();
        prop_assert_eq!(&x.to_string().parse::<InputPoint>().unwrap(), &x);
        let alpha = Assignment::of(&x, s);
        prop_assert_eq!(alpha.to_string().parse::<Assignment>().unwrap(), alpha);
    }

    #[test]
    fn function_spec_text_round_trip(n in 1usize..=4, m in 1u32..=3, k in 2usize..=4, seed: u64) {
        if k <= n {
            let f = FunctionSpec::k_distinctness(k, n, m).unwrap();
            prop_assert_eq!(f.to_string().parse::<FunctionSpec>().unwrap(), f);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<bool> = (0..m.pow(n as u32)).map(|_| rng.random_bool(0.5)).collect();
        let f = FunctionSpec::truth_table(n, m, table).unwrap();
        prop_assert_eq!(f.to_string().parse::<FunctionSpec>().unwrap(), f);
    }

    #[test]
    fn weights_see_only_the_origin(arc_pick: usize, (n, m, x) in input_strategy(4, 4).prop_filter("need n >= 3", |t| t.0 >= 3), noise: u64) {
        let g = build_layered_graph(n, n, |_| true, 1000).unwrap();
        let w = FnWeights(lopsided_weight);
        let x = InputPoint::new(x).unwrap();
        let e = arc_pick % g.num_arcs();
        let origin = g.arc_view(e).origin;
        let mut rng = ChaCha8Rng::seed_from_u64(noise);
        let y: Vec<u32> = (0..n)
            .map(|i| if origin.contains(i) { x.get(i) } else { rng.random_range(1..=m) })
            .collect();
        let y = InputPoint::new(y).unwrap();
        let before: Vec<f64> = realize(&g, &w, &x).unwrap();
        let after: Vec<f64> = realize(&g, &w, &y).unwrap();
        prop_assert_eq!(before[e], after[e]);
    }

    #[test]
    fn type_rows_sum_to_specification(seed: u64, bits: u64, positive: bool) {
        let inst = build_promised_instance(3, 20, &[4, 5], seed % 1000).unwrap();
        let s = Subset::from_bits(bits & Subset::full(20).bits());
        let x = if positive { &inst.positive } else { &inst.negative };
        let (spec, _) = specification_of(s, x, 3).unwrap();
        match type_of(s, x, &inst.layout).unwrap() {
            VertexType::Type(ty) => prop_assert_eq!(ty.specification(), spec),
            VertexType::Accepting => prop_assert!(positive && inst.layout.marked().is_subset_of(s)),
            VertexType::Unsupported => {}
        }
    }

    #[test]
    fn graph_documents_round_trip(seed: u64, n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_layered_graph(&mut rng, n, 12);
        let f = FunctionSpec::element_distinctness(n, 2).unwrap();
        let mut weights = WeightTable::new();
        let mut flows = Vec::new();
        for x in CubeIter::new(n, 2) {
            for e in 0..g.num_arcs() {
                let alpha = Assignment::of(&x, g.arc_view(e).origin);
                weights.insert(e, &alpha, rng.random_range(0.0..5.0));
            }
            if f.evaluate(&x).unwrap() {
                let values = (0..g.num_arcs()).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
                flows.push(Flow { input: x, values });
            }
        }
        let doc = GraphDocument { graph: g, function: Some(f), weights, inputs: Vec::new(), flows };
        let text = doc.to_text().unwrap();
        let back: GraphDocument<f64> = GraphDocument::parse(&text).unwrap();
        prop_assert_eq!(back.to_text().unwrap(), text);
        prop_assert_eq!(back.flows, doc.flows);
    }
}

fn symmetric_instance(n: usize, m: u32) -> (learning_graph::graph::LearningGraph, Domain) {
    let g = build_layered_graph(n, n, |_| true, 1000).unwrap();
    let f = FunctionSpec::element_distinctness(n, m).unwrap();
    (g, Domain::cube(&f, 1000).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weight_scaling(c in 0.1f64..10.0) {
        let (g, domain) = symmetric_instance(3, 3);
        let base = graph_complexity(&g, &FnWeights(lopsided_weight), &domain).unwrap();
        let scaled = graph_complexity(&g, &FnWeights(move |a: &ArcView, x: &Assignment| c * lopsided_weight(a, x)), &domain).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(scaled.negative_max, c * base.negative_max));
        prop_assert!(close(scaled.positive_max, base.positive_max / c));
        prop_assert!(close(scaled.total(), base.total()));
    }

    #[test]
    fn rescaling_keeps_sums_and_objective(c in 0.1f64..10.0) {
        let (g, domain) = symmetric_instance(3, 2);
        let w = FnWeights(lopsided_weight);
        let (rep, flows) = complexity_and_flows(&g, &w, &domain).unwrap();
        let bundle = build_certificate(&g, &w, &flows, &domain).unwrap();
        let scaled = rescale_balance(&bundle, c).unwrap();
        let a = verify_feasibility(&bundle, 1_000_000, true).unwrap();
        let b = verify_feasibility(&scaled, 1_000_000, true).unwrap();
        prop_assert!(a.is_feasible(1e-9) && b.is_feasible(1e-9));
        for (r, s) in a.rows.iter().zip(&b.rows) {
            prop_assert!((r.sum - s.sum).abs() <= 1e-12);
        }
        prop_assert!((objective_value(&scaled) - objective_value(&bundle)).abs() <= 1e-9 * rep.total());
        prop_assert!((objective_value(&bundle) - rep.total()).abs() <= 1e-9 * rep.total());
    }

    #[test]
    fn circulations_never_help(seed: u64, eps in -0.5f64..0.5) {
        let (g, domain) = symmetric_instance(3, 3);
        let w = FnWeights(lopsided_weight);
        let (rep, mut flows) = complexity_and_flows(&g, &w, &domain).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = rng.random_range(0..flows.len());
        // two routes from the root to {i, j}: their difference is a circulation
        let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
        prop_assume!(i != j);
        let route = |a: usize, b: usize| [g.find_arc(Subset::EMPTY, a).unwrap(), g.find_arc(Subset::from_indices([a]), b).unwrap()];
        for e in route(i, j) {
            flows[target].values[e] += eps;
        }
        for e in route(j, i) {
            flows[target].values[e] -= eps;
        }
        let worse = complexity_with_flows(&g, &w, &domain, &flows, 1e-9).unwrap();
        prop_assert!(worse.positive_max >= rep.positive_max - 1e-12);
    }

    #[test]
    fn transported_flows_stay_valid(seed: u64, n in 2usize..=4, m in 2u32..=3) {
        let (g, domain) = symmetric_instance(n, m);
        let f = domain.spec().clone();
        let w = FnWeights(symmetric_weight);
        let exact = ExactWeights(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positives: Vec<&InputPoint> = domain.positives().collect();
        let x = positives[rng.random_range(0..positives.len())];
        let p = optimal_flow_exact(&g, &exact, &f, x).unwrap();
        let sigma = SymmetryElement::random(n, m, &mut rng);
        let moved = transport_flow(&g, &exact, &f, &sigma, &p).unwrap();
        prop_assert!(validate_flow(&g, &exact, &f, &moved).unwrap().is_exact());
        prop_assert_eq!(flow_cost(&g, &exact, &moved).unwrap(), flow_cost(&g, &exact, &p).unwrap());
    }

    #[test]
    fn sampler_is_deterministic(seed: u64) {
        let cfg = SamplerConfig::new(seed, 5000).unwrap();
        let grid = [0.5, 1.0, 2.0];
        prop_assert_eq!(martingale_tail_check(20, cfg, &grid).unwrap(), martingale_tail_check(20, cfg, &grid).unwrap());
        let p = Promise::new(3, vec![3, 4]).unwrap();
        let a = estimate_subtuples(&p, 5, 2, cfg).unwrap();
        let b = estimate_subtuples(&p, 5, 2, cfg).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn tails_are_monotone(seed: u64) {
        let cfg = SamplerConfig::new(seed, 4000).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        prop_assert!(martingale_tail_check(30, cfg, &grid).unwrap().is_monotone());
        let p = Promise::new(3, vec![6, 6]).unwrap();
        let spec = modal_spec(&p, 8).unwrap();
        prop_assert!(type_deviation_tail(&p, &spec, cfg, &grid).unwrap().is_monotone());
    }
}

#[test]
fn flows_of_the_baseline_are_valid_everywhere() {
    let art = build_baseline_graph(2, 4, 3, 2, 1_000_000).unwrap();
    let f = art.domain.spec();
    for p in &art.flows {
        assert!(validate_flow(&art.graph, &ExactWeights(&art.weights), f, p).unwrap().is_exact());
    }
}

#[test]
fn symmetrized_weights_and_flows_are_class_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n, m) in [(3, 3), (4, 2)] {
        let (g, domain) = symmetric_instance(n, m);
        let table = random_table(&mut rng, &g, m);
        let (_, flows) = complexity_and_flows_exact(&g, &table, &domain).unwrap();
        let group = group_elements(n, m, GroupMode::Full { cap: 1000 }).unwrap();
        let (w, p) = symmetrize(&g, &table, &flows, &domain, &group).unwrap();
        // weight: one value per (origin size, origin specification)
        let mut seen = std::collections::HashMap::new();
        for (x, _) in domain.points() {
            let realized: Vec<BigRational> = realize(&g, &w, x).unwrap();
            for (e, v) in realized.into_iter().enumerate() {
                let origin = g.arc_view(e).origin;
                let key = (origin.len(), specification_of(origin, x, 2).unwrap());
                let old = seen.entry(key).or_insert_with(|| v.clone());
                assert_eq!(*old, v);
            }
        }
        // flow: p'_e(x) = p'_{sigma e}(sigma x)
        let by_input: std::collections::HashMap<_, _> = p.iter().map(|f| (f.input.clone(), f)).collect();
        for flow in &p {
            for sigma in &group {
                let image = by_input[&sigma.apply(&flow.input).unwrap()];
                for e in 0..g.num_arcs() {
                    let v = g.arc_view(e);
                    let se = g.find_arc(sigma.map_subset(v.origin), sigma.map_index(v.loaded)).unwrap();
                    assert_eq!(flow.values[e], image.values[se]);
                }
            }
        }
    }
}

fn random_table(rng: &mut ChaCha8Rng, g: &learning_graph::graph::LearningGraph, m: u32) -> WeightTable<BigRational> {
    let mut table = WeightTable::new();
    for e in 0..g.num_arcs() {
        let origin = g.arc_view(e).origin;
        let rows: Vec<Vec<u32>> = if origin.is_empty() {
            vec![Vec::new()]
        } else {
            CubeIter::new(origin.len(), m).map(|x| x.values().to_vec()).collect()
        };
        for vals in rows {
            let q = BigRational::new(BigInt::from(rng.random_range(1..=6)), BigInt::from(rng.random_range(1..=3)));
            table.insert(e, &Assignment::new(origin, vals).unwrap(), q);
        }
    }
    table
}

#[test]
fn sampled_subtuples_match_expectation() {
    for (i, (ell, r, t)) in [(vec![2, 2], 3, 2), (vec![30, 40], 25, 2), (vec![20, 20, 15], 40, 3), (vec![50, 60], 90, 1)]
        .into_iter()
        .enumerate()
    {
        let p = Promise::new(ell.len() + 1, ell).unwrap();
        assert!(p.n_prime() <= 200);
        let exact = expected_subtuples(&p, r, t).unwrap().to_f64().unwrap();
        let est = estimate_subtuples(&p, r, t, SamplerConfig::new(40 + i as u64, 100_000).unwrap()).unwrap();
        assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{:?}: {} vs {exact} (stderr {})", p.ell, est.mean, est.stderr);
    }
}
