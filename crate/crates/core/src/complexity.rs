//! Negative, positive and total complexity of a weighted learning graph.

use num::BigRational;
use rayon::prelude::*;

use crate::domain::{Domain, InputPoint};
use crate::error::{Error, Result};
use crate::flow::{
    accepting_vertices, flow_cost_realized, name_input, optimal_flow_exact_realized,
    optimal_flow_realized, validate_flow_realized, Flow,
};
use crate::graph::LearningGraph;
use crate::scalar::Scalar;
use crate::weights::{realize, WeightFunction};

#[derive(Clone, Debug)]
pub struct ComplexityReport<T = f64> {
    /// `sum_e w_e(y)` per negative input, in domain order.
    pub negative: Vec<(InputPoint, T)>,
    /// Flow cost per positive input, in domain order.
    pub positive: Vec<(InputPoint, T)>,
    pub negative_max: T,
    pub positive_max: T,
}

impl<T: Scalar> ComplexityReport<T> {
    fn from_parts(negative: Vec<(InputPoint, T)>, positive: Vec<(InputPoint, T)>) -> Self {
        let max = |v: &[(InputPoint, T)]| {
            v.iter()
                .map(|(_, c)| c.clone())
                .fold(T::zero(), |a, b| if b > a { b } else { a })
        };
        ComplexityReport {
            negative_max: max(&negative),
            positive_max: max(&positive),
            negative,
            positive,
        }
    }

    /// `N * P`, the square of the total complexity.
    pub fn total_squared(&self) -> T {
        self.negative_max.clone() * self.positive_max.clone()
    }

    /// `sqrt(N * P)`.
    pub fn total(&self) -> f64 {
        self.total_squared().to_f64_lossy().sqrt()
    }

    pub fn worst_negative(&self) -> Option<&InputPoint> {
        argmax(&self.negative)
    }

    pub fn worst_positive(&self) -> Option<&InputPoint> {
        argmax(&self.positive)
    }
}

fn argmax<T: Scalar>(v: &[(InputPoint, T)]) -> Option<&InputPoint> {
    let mut best: Option<&(InputPoint, T)> = None;
    for item in v {
        if best.is_none_or(|b| item.1 > b.1) {
            best = Some(item);
        }
    }
    best.map(|b| &b.0)
}

/// `sum_e w_e(y)`.
pub fn negative_complexity<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    y: &InputPoint,
) -> Result<T> {
    Ok(realize(g, w, y)?
        .into_iter()
        .fold(T::zero(), |a, b| a + b))
}

fn negatives<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    domain: &Domain,
) -> Result<Vec<(InputPoint, T)>> {
    let ys: Vec<&InputPoint> = domain.negatives().collect();
    ys.par_iter()
        .map(|y| Ok(((*y).clone(), negative_complexity(g, w, y)?)))
        .collect()
}

/// Complexity with optimal flows on every positive input.
pub fn graph_complexity<W: WeightFunction<f64> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    domain: &Domain,
) -> Result<ComplexityReport<f64>> {
    let (report, _) = complexity_and_flows(g, w, domain)?;
    Ok(report)
}

/// Like [`graph_complexity`], also returning the optimal flows.
pub fn complexity_and_flows<W: WeightFunction<f64> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    domain: &Domain,
) -> Result<(ComplexityReport<f64>, Vec<Flow<f64>>)> {
    let f = domain.spec();
    let xs: Vec<&InputPoint> = domain.positives().collect();
    let solved: Vec<(Flow<f64>, f64)> = xs
        .par_iter()
        .map(|x| {
            let weights = realize(g, w, x)?;
            let accepting = accepting_vertices(g, f, x)?;
            let (values, cost) =
                optimal_flow_realized(g, &weights, &accepting).map_err(|e| name_input(e, x))?;
            Ok((
                Flow {
                    input: (*x).clone(),
                    values,
                },
                cost,
            ))
        })
        .collect::<Result<_>>()?;
    let positive = solved.iter().map(|(p, c)| (p.input.clone(), *c)).collect();
    let flows = solved.into_iter().map(|(p, _)| p).collect();
    Ok((
        ComplexityReport::from_parts(negatives(g, w, domain)?, positive),
        flows,
    ))
}

/// Exact rational complexity with optimal flows.
pub fn complexity_and_flows_exact<W: WeightFunction<BigRational> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    domain: &Domain,
) -> Result<(ComplexityReport<BigRational>, Vec<Flow<BigRational>>)> {
    let f = domain.spec();
    let xs: Vec<&InputPoint> = domain.positives().collect();
    let solved: Vec<(Flow<BigRational>, BigRational)> = xs
        .par_iter()
        .map(|x| {
            let weights = realize(g, w, x)?;
            let accepting = accepting_vertices(g, f, x)?;
            let (values, cost) = optimal_flow_exact_realized(g, &weights, &accepting)
                .map_err(|e| name_input(e, x))?;
            Ok((
                Flow {
                    input: (*x).clone(),
                    values,
                },
                cost,
            ))
        })
        .collect::<Result<_>>()?;
    let positive = solved.iter().map(|(p, c)| (p.input.clone(), c.clone())).collect();
    let flows = solved.into_iter().map(|(p, _)| p).collect();
    Ok((
        ComplexityReport::from_parts(negatives(g, w, domain)?, positive),
        flows,
    ))
}

/// Complexity using the given flows instead of optimal ones. Every positive
/// input of the domain needs a flow, and each flow must pass validation
/// within `tol` (exactly when `tol` is zero).
pub fn complexity_with_flows<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    domain: &Domain,
    flows: &[Flow<T>],
    tol: f64,
) -> Result<ComplexityReport<T>> {
    let f = domain.spec();
    let by_input: std::collections::HashMap<&InputPoint, &Flow<T>> =
        flows.iter().map(|p| (&p.input, p)).collect();
    let xs: Vec<&InputPoint> = domain.positives().collect();
    let positive = xs
        .par_iter()
        .map(|x| {
            let p = by_input
                .get(x)
                .ok_or_else(|| Error::input(format!("no flow supplied for positive input {x}")))?;
            let weights = realize(g, w, x)?;
            let accepting = accepting_vertices(g, f, x)?;
            let report = validate_flow_realized(g, &weights, &accepting, &p.values)?;
            let ok = if tol == 0.0 {
                report.is_exact()
            } else {
                report.is_clean(tol)
            };
            if !ok {
                return Err(Error::Infeasible(format!(
                    "flow for {x} is not valid (intensity {:?}, max residual {:.3e}, {} zero-weight arcs used)",
                    report.source_intensity,
                    report.max_conservation_residual(),
                    report.zero_weight_violations.len()
                )));
            }
            Ok(((*x).clone(), flow_cost_realized(&weights, &p.values)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexityReport::from_parts(negatives(g, w, domain)?, positive))
}
