//! The uniform construction: load `r` arbitrary elements, then the `k`
//! marked ones.

use std::collections::BTreeMap;

use num::{BigRational, One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::alg1::{CollapsedReport, CollapsedRow};
use crate::combinatorics::{binomial, Combinations};
use crate::domain::{Assignment, Domain, FunctionSpec, InputPoint, Subset};
use crate::error::{Error, Result};
use crate::flow::{accepting_vertices, Flow};
use crate::graph::{build_layered_graph, ArcView, LearningGraph, DEFAULT_VERTEX_CAP};
use crate::symmetry::{weight_from_class_stats, ClassStats, ClassWeighting};
use crate::weights::WeightFunction;

/// One weight per step, indexed by the size of the arc origin.
#[derive(Clone, Debug, PartialEq)]
pub struct StepWeights {
    pub per_step: Vec<f64>,
}

impl WeightFunction for StepWeights {
    fn weight(&self, arc: &ArcView, _alpha: &Assignment) -> Result<f64> {
        Ok(self.per_step.get(arc.origin.len()).copied().unwrap_or(0.0))
    }
}

/// `r` ones followed by `n^i / r^{i-1}` for `i = 1..k`.
pub fn baseline_specialities(k: usize, n: usize, r: usize) -> Vec<f64> {
    let (n, rf) = (n as f64, r.max(1) as f64);
    let mut out = vec![1.0; r];
    out.extend((1..=k as i32).map(|i| n.powi(i) / rf.powi(i - 1)));
    out
}

#[derive(Clone, Debug)]
pub struct BaselineArtifacts {
    pub graph: LearningGraph,
    pub domain: Domain,
    pub flows: Vec<Flow<BigRational>>,
    pub stats: Vec<ClassStats>,
    pub weighting: ClassWeighting,
    pub weights: StepWeights,
}

/// The uniform construction on the full cube `[m]^n`. Flows average, over
/// every choice of `k` equal witnesses, the flow that spreads uniformly over
/// witness-avoiding arcs for `r` steps and then loads the witnesses.
pub fn build_baseline_graph(k: usize, n: usize, m: u32, r: usize, cap: u64) -> Result<BaselineArtifacts> {
    if k < 2 {
        return Err(Error::input("k must be at least 2"));
    }
    if r + k > n {
        return Err(Error::input(format!("depth r + k = {} exceeds n = {n}", r + k)));
    }
    let f = FunctionSpec::k_distinctness(k, n, m)?;
    let domain = Domain::cube(&f, cap)?;
    if domain.positives().next().is_none() {
        return Err(Error::Degenerate(format!("no input of [{m}]^{n} has {k} equal values")));
    }
    let graph = build_layered_graph(n, r + k, |_| true, DEFAULT_VERTEX_CAP)?;
    let xs: Vec<&InputPoint> = domain.positives().collect();
    let flows = xs
        .par_iter()
        .map(|x| baseline_flow(&graph, &f, x, k, r))
        .collect::<Result<Vec<_>>>()?;

    let tau = baseline_specialities(k, n, r);
    let stats = step_stats(&graph, &flows, &tau);
    let weighting = weight_from_class_stats(&stats)?;
    let mut per_step = vec![0.0; r + k];
    for c in &stats {
        per_step[c.step - 1] = weighting.weights[&c.key];
    }
    Ok(BaselineArtifacts {
        graph,
        domain,
        flows,
        stats,
        weighting,
        weights: StepWeights { per_step },
    })
}

fn baseline_flow(g: &LearningGraph, f: &FunctionSpec, x: &InputPoint, k: usize, r: usize) -> Result<Flow<BigRational>> {
    let accepting = accepting_vertices(g, f, x)?;
    let mut by_value: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in 0..x.len() {
        by_value.entry(x.get(i)).or_default().push(i);
    }
    let mut witnesses = Vec::new();
    for idx in by_value.values().filter(|v| v.len() >= k) {
        for bits in Combinations::new(idx.len(), k) {
            witnesses.push(Subset::from_indices(Subset::from_bits(bits).iter().map(|p| idx[p])));
        }
    }
    let mut total = vec![BigRational::zero(); g.num_arcs()];
    let order = g.layer_order();
    for &marked in &witnesses {
        let mut inflow = vec![BigRational::zero(); g.num_vertices()];
        inflow[g.root()] = BigRational::one();
        for &v in &order {
            if inflow[v].is_zero() || accepting[v] {
                continue;
            }
            let s = g.vertex(v);
            let targets: Vec<usize> = if s.len() < r {
                (0..g.n()).filter(|&j| !s.contains(j) && !marked.contains(j)).collect()
            } else {
                marked.difference(s).iter().collect()
            };
            let share = &inflow[v] / BigRational::from_integer(targets.len().into());
            for j in targets {
                let e = g.find_arc(s, j).expect("layered graph holds every arc");
                total[e] += &share;
                let t = g.arc(e).target;
                inflow[t] += &share;
            }
        }
    }
    let count = BigRational::from_integer(witnesses.len().into());
    for v in &mut total {
        *v /= &count;
    }
    Ok(Flow {
        input: x.clone(),
        values: total,
    })
}

/// Per-step statistics: mean nonzero flow, largest per-input total, arc count.
fn step_stats(g: &LearningGraph, flows: &[Flow<BigRational>], tau: &[f64]) -> Vec<ClassStats> {
    let steps = tau.len();
    let mut sum = vec![0.0; steps];
    let mut hits = vec![0usize; steps];
    let mut mu = vec![0.0f64; steps];
    for p in flows {
        let mut total = vec![0.0; steps];
        for (e, v) in p.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let h = g.arc_view(e).origin.len();
            let v = v.to_f64().unwrap_or(0.0);
            sum[h] += v;
            hits[h] += 1;
            total[h] += v;
        }
        for h in 0..steps {
            mu[h] = mu[h].max(total[h]);
        }
    }
    (0..steps)
        .map(|h| ClassStats {
            key: format!("step{}", h + 1),
            step: h + 1,
            pi: if hits[h] == 0 { 0.0 } else { sum[h] / hits[h] as f64 },
            tau: tau[h],
            mu: mu[h],
            count: g.step_arcs(h + 1).count() as f64,
        })
        .collect()
}

/// Per-step specialities and `sum_i sqrt(T_i)` without building the graph.
pub fn baseline_collapsed(k: usize, n: usize, r: usize, with_sizes: bool) -> Result<CollapsedReport> {
    if r + k > n {
        return Err(Error::input(format!("depth r + k = {} exceeds n = {n}", r + k)));
    }
    let tau = baseline_specialities(k, n, r);
    let rows: Vec<CollapsedRow> = tau
        .iter()
        .enumerate()
        .map(|(h, &t)| CollapsedRow {
            step: h + 1,
            label: if h < r {
                format!("first({})", h + 1)
            } else {
                format!("last({})", h + 1 - r)
            },
            class: "*".into(),
            size: with_sizes.then(|| binomial(n as u64, h as u64)),
            speciality: t,
            sqrt_t: t.sqrt(),
        })
        .collect();
    Ok(CollapsedReport {
        estimate: rows.iter().map(|r| r.sqrt_t).sum(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::validate_flow;
    use crate::weights::ExactWeights;

    #[test]
    fn specialities() {
        assert_eq!(baseline_specialities(2, 16, 4), vec![1.0, 1.0, 1.0, 1.0, 16.0, 64.0]);
    }

    #[test]
    fn flows_are_valid() {
        let a = build_baseline_graph(2, 4, 4, 1, 10_000).unwrap();
        assert_eq!(a.graph.depth(), 3);
        let f = a.domain.spec();
        for p in &a.flows {
            let rep = validate_flow(&a.graph, &ExactWeights(&a.weights), f, p).unwrap();
            assert!(rep.is_exact(), "{}", p.input);
        }
        assert!(a.weights.per_step.iter().all(|&w| w > 0.0));
        assert!(build_baseline_graph(2, 4, 4, 3, 10_000).is_err());
    }

    #[test]
    fn collapsed_estimate() {
        let rep = baseline_collapsed(2, 64, 16, true).unwrap();
        assert_eq!(rep.rows.len(), 18);
        assert!((rep.estimate - (16.0 + 8.0 + 16.0)).abs() < 1e-12);
        assert_eq!(rep.rows[1].size, Some(binomial(64, 1)));
    }
}
