//! Dual adversary vectors compiled from a weighted learning graph and its
//! flows, their objective value, and pairwise feasibility checks.
//!
//! The vector `u_{x,j}` has one block per arc loading `j` and, inside the
//! block, one coordinate per assignment of the arc's origin. Only the
//! coordinate at `x_S` can be nonzero, so a vector is stored as a sparse map
//! from arc id to that one coordinate. Two inputs share a coordinate exactly
//! when they agree on the origin of the arc.

use std::collections::HashMap;

use num::{BigRational, Zero};
use rayon::prelude::*;

use crate::domain::{Domain, FunctionSpec, InputPoint, Subset};
use crate::error::{Error, Result};
use crate::exact::{Surd, SurdSum};
use crate::flow::Flow;
use crate::graph::{ArcId, LearningGraph};
use crate::weights::{realize, WeightFunction};

/// `u_{x,j}` restricted to its stored coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector<C = f64> {
    pub input: InputPoint,
    pub index: usize,
    pub coords: Vec<(ArcId, C)>,
}

/// All nonzero coordinates of one input, over every `j`, sorted by arc.
#[derive(Clone, Debug, PartialEq)]
pub struct InputVectors<C = f64> {
    pub input: InputPoint,
    pub positive: bool,
    pub coords: Vec<(ArcId, C)>,
}

#[derive(Clone, Debug)]
pub struct CertificateBundle<C = f64> {
    pub spec: FunctionSpec,
    /// Origin and loaded index of every arc of the source graph.
    arcs: Vec<(Subset, usize)>,
    pub inputs: Vec<InputVectors<C>>,
}

impl<C: Clone> CertificateBundle<C> {
    /// Reassembles a bundle, e.g. from a parsed certificate file. Coordinates
    /// are sorted by arc; an arc may appear once per input, and its origin
    /// must not contain the index it loads.
    pub fn from_parts(spec: FunctionSpec, arcs: Vec<(Subset, usize)>, mut inputs: Vec<InputVectors<C>>) -> Result<Self> {
        for (e, (origin, loaded)) in arcs.iter().enumerate() {
            if *loaded >= spec.n() || origin.contains(*loaded) || origin.max_index().is_some_and(|i| i >= spec.n()) {
                return Err(Error::input(format!("arc {e} ({origin} + {}) does not fit n = {}", loaded + 1, spec.n())));
            }
        }
        for v in &mut inputs {
            spec.check_input(&v.input)?;
            if spec.evaluate(&v.input)? != v.positive {
                return Err(Error::input(format!("input {} has the wrong sign", v.input)));
            }
            v.coords.sort_by_key(|(e, _)| *e);
            if let Some(w) = v.coords.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::input(format!("input {} repeats arc {}", v.input, w[0].0)));
            }
            if let Some((e, _)) = v.coords.iter().find(|(e, _)| *e >= arcs.len()) {
                return Err(Error::input(format!("input {} refers to unknown arc {e}", v.input)));
            }
        }
        Ok(CertificateBundle { spec, arcs, inputs })
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, e: ArcId) -> (Subset, usize) {
        self.arcs[e]
    }

    pub fn positives(&self) -> impl Iterator<Item = &InputVectors<C>> {
        self.inputs.iter().filter(|v| v.positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &InputVectors<C>> {
        self.inputs.iter().filter(|v| !v.positive)
    }

    pub fn get(&self, x: &InputPoint) -> Option<&InputVectors<C>> {
        self.inputs.iter().find(|v| &v.input == x)
    }

    /// `u_{x,j}` for the input at position `i`.
    pub fn dual_vector(&self, i: usize, j: usize) -> DualVector<C> {
        let v = &self.inputs[i];
        DualVector {
            input: v.input.clone(),
            index: j,
            coords: v
                .coords
                .iter()
                .filter(|(e, _)| self.arcs[*e].1 == j)
                .cloned()
                .collect(),
        }
    }

    /// Calls `term(a, b)` for every coordinate shared by the pair `(x, y)`
    /// that enters the feasibility sum: arcs loading an index where the
    /// inputs differ, from an origin where they agree.
    fn for_each_term(&self, x: &InputVectors<C>, y: &InputVectors<C>, mut term: impl FnMut(&C, &C)) {
        let differ = x.input.difference_set(&y.input);
        let (a, b) = (&x.coords, &y.coords);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let (origin, loaded) = self.arcs[a[i].0];
                    if differ.contains(loaded) && origin.is_disjoint(differ) {
                        term(&a[i].1, &b[j].1);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    fn pair_count(&self) -> usize {
        self.positives().count() * self.negatives().count()
    }
}

fn arc_table(g: &LearningGraph) -> Vec<(Subset, usize)> {
    (0..g.num_arcs())
        .map(|e| {
            let v = g.arc_view(e);
            (v.origin, v.loaded)
        })
        .collect()
}

fn flows_by_input<'a, T>(flows: &'a [Flow<T>]) -> HashMap<&'a InputPoint, &'a Flow<T>> {
    flows.iter().map(|p| (&p.input, p)).collect()
}

/// `sqrt(w_e(y))` for negative inputs and `p_e(x) / sqrt(w_e(x))` for
/// positive ones, with `0/0 = 0`.
pub fn build_certificate<W: WeightFunction<f64> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    flows: &[Flow<f64>],
    domain: &Domain,
) -> Result<CertificateBundle<f64>> {
    let by_input = flows_by_input(flows);
    let inputs = domain
        .points()
        .par_iter()
        .map(|(x, positive)| {
            let weights = realize(g, w, x)?;
            let coords = if *positive {
                let p = by_input
                    .get(x)
                    .ok_or_else(|| Error::input(format!("no flow for positive input {x}")))?;
                positive_coords(&weights, &p.values, x, |p, w| p / w.sqrt())?
            } else {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(e, w)| (e, w.sqrt()))
                    .collect()
            };
            Ok(InputVectors {
                input: x.clone(),
                positive: *positive,
                coords,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CertificateBundle {
        spec: domain.spec().clone(),
        arcs: arc_table(g),
        inputs,
    })
}

fn positive_coords<T: num::Zero + Clone + std::fmt::Debug, C>(
    weights: &[T],
    values: &[T],
    x: &InputPoint,
    coord: impl Fn(&T, &T) -> C,
) -> Result<Vec<(ArcId, C)>> {
    if values.len() != weights.len() {
        return Err(Error::input(format!("flow for {x} does not match the arc count")));
    }
    let mut out = Vec::new();
    for (e, (w, p)) in weights.iter().zip(values).enumerate() {
        if p.is_zero() {
            continue;
        }
        if w.is_zero() {
            return Err(Error::Infeasible(format!(
                "input {x}: arc {e} carries flow {p:?} but has weight 0"
            )));
        }
        out.push((e, coord(p, w)));
    }
    Ok(out)
}

/// Exact certificate: coordinates are `q * sqrt(r)` with rational `q`.
pub fn build_certificate_exact<W: WeightFunction<BigRational> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    flows: &[Flow<BigRational>],
    domain: &Domain,
) -> Result<CertificateBundle<Surd>> {
    let by_input = flows_by_input(flows);
    let inputs = domain
        .points()
        .par_iter()
        .map(|(x, positive)| {
            let weights = realize(g, w, x)?;
            let coords = if *positive {
                let p = by_input
                    .get(x)
                    .ok_or_else(|| Error::input(format!("no flow for positive input {x}")))?;
                positive_coords(&weights, &p.values, x, |p, w| {
                    // p / sqrt(w) = (p / w) sqrt(w)
                    Surd::sqrt(w).expect("weights are nonnegative").scale(&(p / w))
                })?
            } else {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(e, w)| (e, Surd::sqrt(w).expect("weights are nonnegative")))
                    .collect()
            };
            Ok(InputVectors {
                input: x.clone(),
                positive: *positive,
                coords,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CertificateBundle {
        spec: domain.spec().clone(),
        arcs: arc_table(g),
        inputs,
    })
}

impl CertificateBundle<f64> {
    /// `sum_j ||u_{x,j}||^2` per input.
    pub fn norm_squared(v: &InputVectors<f64>) -> f64 {
        v.coords.iter().map(|(_, c)| c * c).sum()
    }

    /// Largest `sum_j ||u_{x,j}||^2` over positive (`true`) or negative inputs.
    pub fn side_max(&self, positive: bool) -> f64 {
        self.inputs
            .iter()
            .filter(|v| v.positive == positive)
            .map(Self::norm_squared)
            .fold(0.0, f64::max)
    }

    /// Multiplier for [`rescale_balance`] that equalises the two side maxima.
    pub fn balancing_factor(&self) -> f64 {
        (self.side_max(false) / self.side_max(true)).powf(0.25)
    }
}

impl CertificateBundle<Surd> {
    pub fn side_max_exact(&self, positive: bool) -> BigRational {
        self.inputs
            .iter()
            .filter(|v| v.positive == positive)
            .map(|v| {
                v.coords
                    .iter()
                    .fold(BigRational::zero(), |acc, (_, c)| acc + c.square())
            })
            .fold(BigRational::zero(), |a, b| if b > a { b } else { a })
    }

    /// The square of the objective, exactly.
    pub fn objective_squared(&self) -> BigRational {
        self.side_max_exact(true) * self.side_max_exact(false)
    }

    pub fn to_f64(&self) -> CertificateBundle<f64> {
        CertificateBundle {
            spec: self.spec.clone(),
            arcs: self.arcs.clone(),
            inputs: self
                .inputs
                .iter()
                .map(|v| InputVectors {
                    input: v.input.clone(),
                    positive: v.positive,
                    coords: v.coords.iter().map(|(e, c)| (*e, c.to_f64())).collect(),
                })
                .collect(),
        }
    }
}

/// `sqrt(max_1 * max_0)`.
pub fn objective_value(bundle: &CertificateBundle<f64>) -> f64 {
    (bundle.side_max(true) * bundle.side_max(false)).sqrt()
}

/// Multiplies positive-side vectors by `c` and negative-side ones by `1/c`.
pub fn rescale_balance(bundle: &CertificateBundle<f64>, c: f64) -> Result<CertificateBundle<f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::input(format!("rescaling factor must be positive, got {c}")));
    }
    let mut out = bundle.clone();
    for v in &mut out.inputs {
        let s = if v.positive { c } else { 1.0 / c };
        for (_, coord) in &mut v.coords {
            *coord *= s;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRow {
    pub x: InputPoint,
    pub y: InputPoint,
    pub sum: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub pairs: usize,
    pub max_deviation: f64,
    pub worst_pair: Option<(InputPoint, InputPoint)>,
    /// Every pair, when requested.
    pub rows: Vec<PairRow>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

fn check_pair_cap<C: Clone>(bundle: &CertificateBundle<C>, cap: u64) -> Result<()> {
    let pairs = bundle.pair_count() as u64;
    if pairs > cap {
        return Err(Error::Resource(format!("{pairs} input pairs exceed cap {cap}")));
    }
    Ok(())
}

/// `|sum_{j: x_j != y_j} <u_{x,j}, u_{y,j}> - 1|` over every positive and
/// negative pair.
pub fn verify_feasibility(
    bundle: &CertificateBundle<f64>,
    cap: u64,
    keep_rows: bool,
) -> Result<FeasibilityReport> {
    check_pair_cap(bundle, cap)?;
    let negatives: Vec<&InputVectors<f64>> = bundle.negatives().collect();
    let positives: Vec<&InputVectors<f64>> = bundle.positives().collect();
    let per_x: Vec<(f64, Option<(InputPoint, InputPoint)>, Vec<PairRow>)> = positives
        .par_iter()
        .map(|x| {
            let mut worst = (f64::NEG_INFINITY, None);
            let mut rows = Vec::new();
            for y in &negatives {
                let mut sum = 0.0;
                bundle.for_each_term(x, y, |a, b| sum += a * b);
                let deviation = (sum - 1.0).abs();
                if deviation > worst.0 || deviation.is_nan() {
                    worst = (deviation, Some((x.input.clone(), y.input.clone())));
                }
                if keep_rows {
                    rows.push(PairRow {
                        x: x.input.clone(),
                        y: y.input.clone(),
                        sum,
                        deviation,
                    });
                }
            }
            (worst.0, worst.1, rows)
        })
        .collect();
    let mut report = FeasibilityReport {
        pairs: positives.len() * negatives.len(),
        max_deviation: 0.0,
        worst_pair: None,
        rows: Vec::new(),
    };
    for (dev, pair, rows) in per_x {
        if pair.is_some() && (dev > report.max_deviation || report.worst_pair.is_none() || dev.is_nan()) {
            report.max_deviation = dev;
            report.worst_pair = pair;
        }
        report.rows.extend(rows);
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ExactFeasibilityReport {
    pub pairs: usize,
    /// Pairs whose sum is not exactly 1.
    pub failures: usize,
    pub first_failure: Option<(InputPoint, InputPoint, String)>,
    /// Largest deviation after converting the exact sums to floats.
    pub max_deviation: f64,
}

impl ExactFeasibilityReport {
    pub fn is_exact(&self) -> bool {
        self.failures == 0
    }
}

/// Exact pair check: every sum must equal 1 as a rational.
pub fn verify_feasibility_exact(
    bundle: &CertificateBundle<Surd>,
    cap: u64,
) -> Result<ExactFeasibilityReport> {
    check_pair_cap(bundle, cap)?;
    let negatives: Vec<&InputVectors<Surd>> = bundle.negatives().collect();
    let positives: Vec<&InputVectors<Surd>> = bundle.positives().collect();
    let one = BigRational::from_integer(1.into());
    let per_x: Vec<(usize, Option<(InputPoint, InputPoint, String)>, f64)> = positives
        .par_iter()
        .map(|x| {
            let mut failures = 0;
            let mut first = None;
            let mut max_dev: f64 = 0.0;
            for y in &negatives {
                let mut sum = SurdSum::new();
                bundle.for_each_term(x, y, |a, b| sum.add(&a.mul(b)));
                max_dev = max_dev.max((sum.to_f64() - 1.0).abs());
                if sum.as_rational().as_ref() != Some(&one) {
                    failures += 1;
                    if first.is_none() {
                        first = Some((x.input.clone(), y.input.clone(), sum.to_string()));
                    }
                }
            }
            (failures, first, max_dev)
        })
        .collect();
    let mut report = ExactFeasibilityReport {
        pairs: positives.len() * negatives.len(),
        failures: 0,
        first_failure: None,
        max_deviation: 0.0,
    };
    for (failures, first, dev) in per_x {
        report.failures += failures;
        if report.first_failure.is_none() {
            report.first_failure = first;
        }
        report.max_deviation = report.max_deviation.max(dev);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::complexity_and_flows;
    use crate::graph::build_layered_graph;
    use crate::weights::UniformWeights;

    fn single_arc() -> (LearningGraph, Domain) {
        let g = build_layered_graph(1, 1, |_| true, 10).unwrap();
        let f = FunctionSpec::from_predicate(1, 2, |x| x.get(0) == 2).unwrap();
        (g, Domain::cube(&f, 100).unwrap())
    }

    fn or_like() -> (LearningGraph, Domain) {
        let g = build_layered_graph(2, 1, |_| true, 10).unwrap();
        let f = FunctionSpec::from_predicate(2, 2, |x| x.values().contains(&2)).unwrap();
        (g, Domain::cube(&f, 100).unwrap())
    }

    fn bundle(g: &LearningGraph, d: &Domain) -> CertificateBundle<f64> {
        let w = UniformWeights(1.0);
        let (_, flows) = complexity_and_flows(g, &w, d).unwrap();
        build_certificate(g, &w, &flows, d).unwrap()
    }

    #[test]
    fn single_arc_certificate() {
        let (g, d) = single_arc();
        let b = bundle(&g, &d);
        let x: InputPoint = "2".parse().unwrap();
        assert_eq!(b.get(&x).unwrap().coords, vec![(0, 1.0)]);
        assert_eq!(objective_value(&b), 1.0);
        let r = verify_feasibility(&b, 100, true).unwrap();
        assert_eq!(r.pairs, 1);
        assert_eq!(r.rows[0].sum, 1.0);

        let scaled = rescale_balance(&b, 2.0).unwrap();
        assert_eq!(scaled.side_max(true), 4.0);
        assert_eq!(scaled.side_max(false), 0.25);
        assert_eq!(objective_value(&scaled), 1.0);
        assert!(rescale_balance(&b, 0.0).is_err());
        assert!(rescale_balance(&b, -1.0).is_err());
    }

    #[test]
    fn or_like_certificate() {
        let (g, d) = or_like();
        let b = bundle(&g, &d);
        assert!((objective_value(&b) - 2f64.sqrt()).abs() < 1e-12);
        let r = verify_feasibility(&b, 100, true).unwrap();
        assert!(r.max_deviation < 1e-12);
        // 3 positives against 1 negative
        assert_eq!(r.pairs, 3);
        let c = b.balancing_factor();
        let balanced = rescale_balance(&b, c).unwrap();
        assert!((balanced.side_max(true) - 2f64.sqrt()).abs() < 1e-12);
        assert!((balanced.side_max(false) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.dual_vector(0, 0).coords.len(), 1);
    }

    #[test]
    fn exact_certificate() {
        let (g, d) = or_like();
        let w = UniformWeights(1.0);
        let ew = crate::weights::ExactWeights(&w);
        let (_, flows) = crate::complexity::complexity_and_flows_exact(&g, &ew, &d).unwrap();
        let b = build_certificate_exact(&g, &ew, &flows, &d).unwrap();
        let r = verify_feasibility_exact(&b, 100).unwrap();
        assert!(r.is_exact(), "{:?}", r.first_failure);
        assert_eq!(b.objective_squared(), crate::scalar::rational(2, 1));
    }

    #[test]
    fn pair_cap() {
        let (g, d) = or_like();
        let b = bundle(&g, &d);
        assert!(matches!(verify_feasibility(&b, 2, false), Err(Error::Resource(_))));
    }
}
