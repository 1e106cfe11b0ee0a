//! Flows on graph instances, their cost, validation, the optimal (electrical)
//! flow and the conditioning construction.

use std::collections::VecDeque;

use log::debug;
use nalgebra::{DMatrix, DVector};
use num::BigRational;

use crate::domain::{FunctionSpec, InputPoint};
use crate::error::{Error, Result};
use crate::exact::solve_rational;
use crate::graph::{ArcId, LearningGraph, VertexId};
use crate::scalar::Scalar;
use crate::weights::{realize, WeightFunction};

/// Above this many unknowns the potential equation is solved iteratively.
pub const DENSE_SOLVER_LIMIT: usize = 2000;

/// A real value on every arc of a graph, for one positive input.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow<T = f64> {
    pub input: InputPoint,
    pub values: Vec<T>,
}

impl<T: Scalar> Flow<T> {
    pub fn zero(input: InputPoint, num_arcs: usize) -> Self {
        Flow {
            input,
            values: vec![T::zero(); num_arcs],
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Flow<U> {
        Flow {
            input: self.input.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Flow<f64> {
        self.map(|v| v.to_f64_lossy())
    }
}

/// `sum p_e^2 / w_e` with `0/0 = 0`.
pub fn flow_cost_realized<T: Scalar>(weights: &[T], values: &[T]) -> Result<T> {
    if weights.len() != values.len() {
        return Err(Error::input(format!(
            "flow has {} values for {} arcs",
            values.len(),
            weights.len()
        )));
    }
    let mut total = T::zero();
    for (e, (w, p)) in weights.iter().zip(values).enumerate() {
        if p.is_zero() {
            continue;
        }
        if w.is_zero() {
            return Err(Error::Infeasible(format!(
                "arc {e} carries flow {p:?} but has weight 0"
            )));
        }
        total = total + p.clone() * p.clone() / w.clone();
    }
    Ok(total)
}

pub fn flow_cost<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    p: &Flow<T>,
) -> Result<T> {
    let weights = realize(g, w, &p.input)?;
    flow_cost_realized(&weights, &p.values)
}

/// Which vertices of `g` are accepting for `x`.
pub fn accepting_vertices(g: &LearningGraph, f: &FunctionSpec, x: &InputPoint) -> Result<Vec<bool>> {
    f.check_input(x)?;
    g.vertices().iter().map(|&s| f.is_accepting(x, s)).collect()
}

/// Per-vertex balance of a flow.
#[derive(Clone, Debug)]
pub struct FlowReport<T = f64> {
    /// Net outflow of the root.
    pub source_intensity: T,
    /// Net inflow of every non-root, non-accepting vertex (should vanish).
    pub conservation: Vec<(VertexId, T)>,
    /// Net inflow of every accepting vertex (should be nonnegative).
    pub absorption: Vec<(VertexId, T)>,
    /// Arcs with nonzero flow and zero weight.
    pub zero_weight_violations: Vec<ArcId>,
}

impl<T: Scalar> FlowReport<T> {
    pub fn max_conservation_residual(&self) -> f64 {
        self.conservation
            .iter()
            .map(|(_, r)| r.to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }

    pub fn total_absorbed(&self) -> T {
        self.absorption
            .iter()
            .fold(T::zero(), |acc, (_, a)| acc + a.clone())
    }

    pub fn intensity_violation(&self, tol: f64) -> bool {
        (self.source_intensity.to_f64_lossy() - 1.0).abs() > tol
    }

    pub fn conservation_violations(&self, tol: f64) -> Vec<VertexId> {
        self.conservation
            .iter()
            .filter(|(_, r)| r.to_f64_lossy().abs() > tol)
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn negative_absorptions(&self, tol: f64) -> Vec<VertexId> {
        self.absorption
            .iter()
            .filter(|(_, a)| a.to_f64_lossy() < -tol)
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn is_clean(&self, tol: f64) -> bool {
        !self.intensity_violation(tol)
            && self.conservation_violations(tol).is_empty()
            && self.negative_absorptions(tol).is_empty()
            && self.zero_weight_violations.is_empty()
    }

    /// Clean with zero tolerance, compared in `T` itself.
    pub fn is_exact(&self) -> bool {
        self.source_intensity == T::one()
            && self.conservation.iter().all(|(_, r)| r.is_zero())
            && self.absorption.iter().all(|(_, a)| *a >= T::zero())
            && self.zero_weight_violations.is_empty()
    }
}

pub fn validate_flow_realized<T: Scalar>(
    g: &LearningGraph,
    weights: &[T],
    accepting: &[bool],
    values: &[T],
) -> Result<FlowReport<T>> {
    if values.len() != g.num_arcs() || weights.len() != g.num_arcs() {
        return Err(Error::input("flow or weight vector does not match the arc count"));
    }
    let mut net_in = vec![T::zero(); g.num_vertices()];
    let mut zero_weight_violations = Vec::new();
    for (e, a) in g.arcs().iter().enumerate() {
        let p = &values[e];
        if p.is_zero() {
            continue;
        }
        if weights[e].is_zero() {
            zero_weight_violations.push(e);
        }
        net_in[a.target] = net_in[a.target].clone() + p.clone();
        net_in[a.origin] = net_in[a.origin].clone() - p.clone();
    }
    let root = g.root();
    let mut conservation = Vec::new();
    let mut absorption = Vec::new();
    for (v, net) in net_in.iter().enumerate() {
        if v == root {
            continue;
        }
        if accepting[v] {
            absorption.push((v, net.clone()));
        } else {
            conservation.push((v, net.clone()));
        }
    }
    Ok(FlowReport {
        source_intensity: -net_in[root].clone(),
        conservation,
        absorption,
        zero_weight_violations,
    })
}

pub fn validate_flow<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    f: &FunctionSpec,
    p: &Flow<T>,
) -> Result<FlowReport<T>> {
    let weights = realize(g, w, &p.input)?;
    let accepting = accepting_vertices(g, f, &p.input)?;
    validate_flow_realized(g, &weights, &accepting, &p.values)
}

/// The reduced potential problem of one instance: positive-weight arcs,
/// accepting vertices merged into a grounded sink, restricted to the
/// component of the root.
struct PotentialSystem {
    /// Unknown index per vertex; `None` for the sink and for vertices outside
    /// the root component.
    unknown: Vec<Option<usize>>,
    in_component: Vec<bool>,
    size: usize,
    /// `(a, b, arc)` with `a`, `b` unknown indices (`None` = sink).
    edges: Vec<(Option<usize>, Option<usize>, ArcId)>,
    root_unknown: usize,
}

impl PotentialSystem {
    fn new<T: Scalar>(g: &LearningGraph, weights: &[T], accepting: &[bool]) -> Result<Self> {
        let root = g.root();
        if accepting[root] {
            return Err(Error::Degenerate(
                "the empty set is already accepting; no query is needed".into(),
            ));
        }
        // Undirected reachability over positive-weight arcs. Flows may run
        // against arc direction, so this is the right notion of connectivity.
        let nv = g.num_vertices();
        let mut adj: Vec<Vec<(VertexId, ArcId)>> = vec![Vec::new(); nv];
        for (e, a) in g.arcs().iter().enumerate() {
            if weights[e] > T::zero() {
                adj[a.origin].push((a.target, e));
                adj[a.target].push((a.origin, e));
            }
        }
        // Accepting vertices form one node, so reaching any of them reaches all.
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut sink_reached = false;
        while let Some(v) = queue.pop_front() {
            if accepting[v] {
                if !sink_reached {
                    sink_reached = true;
                    for u in 0..nv {
                        if accepting[u] && !seen[u] {
                            seen[u] = true;
                            queue.push_back(u);
                        }
                    }
                }
            }
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        if !sink_reached {
            return Err(Error::Infeasible(
                "no accepting vertex is reachable through positive-weight arcs".into(),
            ));
        }
        let mut unknown = vec![None; nv];
        let mut size = 0;
        for v in 0..nv {
            if seen[v] && !accepting[v] {
                unknown[v] = Some(size);
                size += 1;
            }
        }
        let edges = g
            .arcs()
            .iter()
            .enumerate()
            .filter(|(e, a)| weights[*e] > T::zero() && seen[a.origin])
            .map(|(e, a)| (unknown[a.origin], unknown[a.target], e))
            .collect();
        Ok(PotentialSystem {
            root_unknown: unknown[root].expect("root is an unknown"),
            unknown,
            in_component: seen,
            size,
            edges,
        })
    }

    fn dense_laplacian<T: Scalar>(&self, weights: &[T]) -> Vec<Vec<T>> {
        let mut l = vec![vec![T::zero(); self.size]; self.size];
        for &(a, b, e) in &self.edges {
            let w = &weights[e];
            if let Some(a) = a {
                l[a][a] = l[a][a].clone() + w.clone();
            }
            if let Some(b) = b {
                l[b][b] = l[b][b].clone() + w.clone();
            }
            if let (Some(a), Some(b)) = (a, b) {
                l[a][b] = l[a][b].clone() - w.clone();
                l[b][a] = l[b][a].clone() - w.clone();
            }
        }
        l
    }

    fn arc_flows<T: Scalar>(&self, g: &LearningGraph, weights: &[T], phi: &[T]) -> Vec<T> {
        let pot = |v: VertexId| -> T {
            match self.unknown[v] {
                Some(i) => phi[i].clone(),
                None => T::zero(),
            }
        };
        g.arcs()
            .iter()
            .enumerate()
            .map(|(e, a)| {
                if weights[e] > T::zero() && self.in_component[a.origin] {
                    weights[e].clone() * (pot(a.origin) - pot(a.target))
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// Optimal flow for one instance given realized weights and accepting flags.
/// Returns the arc values and the cost (the root potential).
pub fn optimal_flow_realized(
    g: &LearningGraph,
    weights: &[f64],
    accepting: &[bool],
) -> Result<(Vec<f64>, f64)> {
    let sys = PotentialSystem::new(g, weights, accepting)?;
    let mut rhs = vec![0.0; sys.size];
    rhs[sys.root_unknown] = 1.0;
    let phi = if sys.size <= DENSE_SOLVER_LIMIT {
        solve_dense(&sys, weights, &rhs)?
    } else {
        solve_pcg(&sys, weights, &rhs)?
    };
    let values = sys.arc_flows(g, weights, &phi);
    Ok((values, phi[sys.root_unknown]))
}

fn solve_dense(sys: &PotentialSystem, weights: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let rows = sys.dense_laplacian(weights);
    let n = sys.size;
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    let x = match m.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => m
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Infeasible("singular potential system".into()))?,
    };
    Ok(x.iter().copied().collect())
}

/// Jacobi-preconditioned conjugate gradients on the grounded Laplacian.
fn solve_pcg(sys: &PotentialSystem, weights: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.size;
    let mut diag = vec![0.0; n];
    let mut off: Vec<(usize, usize, f64)> = Vec::new();
    for &(a, b, e) in &sys.edges {
        let w = weights[e];
        if let Some(a) = a {
            diag[a] += w;
        }
        if let Some(b) = b {
            diag[b] += w;
        }
        if let (Some(a), Some(b)) = (a, b) {
            off.push((a, b, w));
        }
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = diag[i] * v[i];
        }
        for &(a, b, w) in &off {
            out[a] -= w * v[b];
            out[b] -= w * v[a];
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let norm_b = dot(rhs, rhs).sqrt();
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 1000;
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= 1e-14 * norm_b {
            debug!("pcg converged after {it} iterations on {n} unknowns");
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Infeasible(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}

/// Minimum-cost unit flow from the root into the accepting set.
pub fn optimal_flow<W: WeightFunction<f64> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    f: &FunctionSpec,
    x: &InputPoint,
) -> Result<Flow<f64>> {
    let weights = realize(g, w, x)?;
    let accepting = accepting_vertices(g, f, x)?;
    let (values, _) = optimal_flow_realized(g, &weights, &accepting)
        .map_err(|e| name_input(e, x))?;
    Ok(Flow {
        input: x.clone(),
        values,
    })
}

/// Exact rational version of [`optimal_flow_realized`].
pub fn optimal_flow_exact_realized(
    g: &LearningGraph,
    weights: &[BigRational],
    accepting: &[bool],
) -> Result<(Vec<BigRational>, BigRational)> {
    let sys = PotentialSystem::new(g, weights, accepting)?;
    let mut rhs = vec![BigRational::from_count(0); sys.size];
    rhs[sys.root_unknown] = BigRational::from_count(1);
    let phi = solve_rational(sys.dense_laplacian(weights), rhs)
        .ok_or_else(|| Error::Infeasible("singular potential system".into()))?;
    let values = sys.arc_flows(g, weights, &phi);
    let cost = phi[sys.root_unknown].clone();
    Ok((values, cost))
}

pub fn optimal_flow_exact<W: WeightFunction<BigRational> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    f: &FunctionSpec,
    x: &InputPoint,
) -> Result<Flow<BigRational>> {
    let weights = realize(g, w, x)?;
    let accepting = accepting_vertices(g, f, x)?;
    let (values, _) = optimal_flow_exact_realized(g, &weights, &accepting)
        .map_err(|e| name_input(e, x))?;
    Ok(Flow {
        input: x.clone(),
        values,
    })
}

pub(crate) fn name_input(e: Error, x: &InputPoint) -> Error {
    match e {
        Error::Infeasible(m) => Error::Infeasible(format!("input {x}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("input {x}: {m}")),
        other => other,
    }
}

/// Restricts a nonnegative flow ending in the antichain `sinks` to the part
/// that ends in `keep`, renormalised to unit intensity.
///
/// Each arc value is multiplied by the fraction of its flow that ends in
/// `keep` and divided by the kept mass `t`, so no arc grows by more than
/// `1/t` and the cost grows by at most `1/t^2`.
pub fn condition_flow<T: Scalar>(
    g: &LearningGraph,
    flow: &Flow<T>,
    sinks: &[VertexId],
    keep: &[VertexId],
) -> Result<Flow<T>> {
    let nv = g.num_vertices();
    if flow.values.len() != g.num_arcs() {
        return Err(Error::input("flow does not match the arc count"));
    }
    if flow.values.iter().any(|p| *p < T::zero()) {
        return Err(Error::input("conditioning needs a nonnegative flow"));
    }
    let mut role = vec![0u8; nv]; // 1 = dropped sink, 2 = kept sink
    for &v in sinks {
        role[v] = 1;
    }
    for &v in keep {
        if role[v] == 0 {
            return Err(Error::input(format!(
                "kept vertex {} is not among the sinks",
                g.vertex(v)
            )));
        }
        role[v] = 2;
    }
    for (i, &a) in sinks.iter().enumerate() {
        for &b in &sinks[i + 1..] {
            let (sa, sb) = (g.vertex(a), g.vertex(b));
            if sa.is_subset_of(sb) || sb.is_subset_of(sa) {
                return Err(Error::input(format!("sinks {sa} and {sb} are comparable")));
            }
        }
    }
    for &v in sinks {
        if g.out_arcs(v).iter().any(|&e| !flow.values[e].is_zero()) {
            return Err(Error::input(format!(
                "flow continues past sink {}",
                g.vertex(v)
            )));
        }
    }
    // fraction[v] = share of the flow through v that ends in `keep`
    let mut fraction = vec![T::zero(); nv];
    let order = g.layer_order();
    for &v in order.iter().rev() {
        fraction[v] = match role[v] {
            2 => T::one(),
            1 => T::zero(),
            _ => {
                let mut out = T::zero();
                let mut kept = T::zero();
                for &e in g.out_arcs(v) {
                    let p = &flow.values[e];
                    out = out + p.clone();
                    kept = kept + p.clone() * fraction[g.arc(e).target].clone();
                }
                if out.is_zero() {
                    T::zero()
                } else {
                    kept / out
                }
            }
        };
    }
    let t = keep.iter().fold(T::zero(), |acc, &v| {
        g.in_arcs(v)
            .iter()
            .fold(acc, |acc, &e| acc + flow.values[e].clone())
    });
    if t.is_zero() {
        return Err(Error::Infeasible(
            "no flow reaches the kept vertices; conditioning is impossible".into(),
        ));
    }
    let values = g
        .arcs()
        .iter()
        .enumerate()
        .map(|(e, a)| flow.values[e].clone() * fraction[a.target].clone() / t.clone())
        .collect();
    Ok(Flow {
        input: flow.input.clone(),
        values,
    })
}

/// Mass absorbed by each listed vertex.
pub fn inflow<T: Scalar>(g: &LearningGraph, flow: &Flow<T>, v: VertexId) -> T {
    g.in_arcs(v)
        .iter()
        .fold(T::zero(), |acc, &e| acc + flow.values[e].clone())
}
