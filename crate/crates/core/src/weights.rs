//! Arc weight functions.
//!
//! A weight function sees an arc and the assignment `x_S` on its origin, and
//! nothing else: locality is a property of the signature, not a convention.
//! Weight 0 means the arc is missing for that input.

use std::collections::HashMap;

use num::BigRational;

use crate::domain::{Assignment, CubeIter, InputPoint};
use crate::error::{Error, Result};
use crate::graph::{ArcId, ArcView, LearningGraph};
use crate::scalar::{rational_from_f64, Scalar};

pub trait WeightFunction<T = f64>: Send + Sync {
    fn weight(&self, arc: &ArcView, alpha: &Assignment) -> Result<T>;
}

/// The same weight on every arc and assignment.
#[derive(Clone, Copy, Debug)]
pub struct UniformWeights(pub f64);

impl WeightFunction for UniformWeights {
    fn weight(&self, _arc: &ArcView, _alpha: &Assignment) -> Result<f64> {
        Ok(self.0)
    }
}

/// Weight given by a closure of the arc and origin assignment.
pub struct FnWeights<F>(pub F);

impl<F> WeightFunction for FnWeights<F>
where
    F: Fn(&ArcView, &Assignment) -> f64 + Send + Sync,
{
    fn weight(&self, arc: &ArcView, alpha: &Assignment) -> Result<f64> {
        Ok((self.0)(arc, alpha))
    }
}

/// Weights stored per `(arc, x_S)`.
#[derive(Clone, Debug, Default)]
pub struct WeightTable<T = f64> {
    entries: HashMap<(ArcId, Vec<u32>), T>,
    default: Option<T>,
}

impl<T: Clone> WeightTable<T> {
    pub fn new() -> Self {
        WeightTable {
            entries: HashMap::new(),
            default: None,
        }
    }

    /// Value used for pairs absent from the table; without one, lookups of
    /// missing pairs fail.
    pub fn with_default(mut self, default: T) -> Self {
        self.default = Some(default);
        self
    }

    pub fn insert(&mut self, arc: ArcId, alpha: &Assignment, value: T) {
        self.entries.insert((arc, alpha.values().to_vec()), value);
    }

    pub fn get(&self, arc: ArcId, alpha: &Assignment) -> Option<&T> {
        self.entries
            .get(&(arc, alpha.values().to_vec()))
            .or(self.default.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by arc, then by assignment values.
    pub fn sorted_entries(&self) -> Vec<(ArcId, &[u32], &T)> {
        let mut v: Vec<_> = self
            .entries
            .iter()
            .map(|((e, vals), w)| (*e, vals.as_slice(), w))
            .collect();
        v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        v
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> WeightTable<U> {
        WeightTable {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
            default: self.default.as_ref().map(&f),
        }
    }
}

impl<T: Scalar> WeightFunction<T> for WeightTable<T> {
    fn weight(&self, arc: &ArcView, alpha: &Assignment) -> Result<T> {
        self.get(arc.id, alpha).cloned().ok_or_else(|| {
            Error::input(format!(
                "no weight for arc {} on assignment {alpha}",
                arc.id
            ))
        })
    }
}

/// Exact rational view of a floating-point weight function.
pub struct ExactWeights<'a, W: ?Sized>(pub &'a W);

impl<W: WeightFunction<f64> + ?Sized> WeightFunction<BigRational> for ExactWeights<'_, W> {
    fn weight(&self, arc: &ArcView, alpha: &Assignment) -> Result<BigRational> {
        let w = self.0.weight(arc, alpha)?;
        rational_from_f64(w).ok_or_else(|| Error::input(format!("weight {w} is not finite")))
    }
}

/// `w_e(x)` for every arc, checked finite and nonnegative.
pub fn realize<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    x: &InputPoint,
) -> Result<Vec<T>> {
    if x.len() != g.n() {
        return Err(Error::input(format!(
            "input {x} has length {}, graph has n={}",
            x.len(),
            g.n()
        )));
    }
    (0..g.num_arcs())
        .map(|e| {
            let view = g.arc_view(e);
            let alpha = Assignment::of(x, view.origin);
            let v = w.weight(&view, &alpha)?;
            if v < T::zero() || !v.to_f64_lossy().is_finite() {
                return Err(Error::input(format!(
                    "weight of arc {e} on {alpha} is {v:?}; weights must be finite and nonnegative"
                )));
            }
            Ok(v)
        })
        .collect()
}

/// Tabulates `w` on every assignment realised by `inputs`.
pub fn materialize_on<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    inputs: impl IntoIterator<Item = InputPoint>,
) -> Result<WeightTable<T>> {
    let mut table = WeightTable::new();
    for x in inputs {
        let realized = realize(g, w, &x)?;
        for (e, v) in realized.into_iter().enumerate() {
            let alpha = Assignment::of(&x, g.arc_view(e).origin);
            table.insert(e, &alpha, v);
        }
    }
    Ok(table)
}

/// Tabulates `w` on every `alpha in [m]^S` for every arc, refusing when the
/// table would exceed `cap` entries.
pub fn materialize_all<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    m: u32,
    cap: usize,
) -> Result<WeightTable<T>> {
    let mut total = 0u128;
    for a in g.arcs() {
        total += (m as u128).pow(g.vertex(a.origin).len() as u32);
    }
    if total > cap as u128 {
        return Err(Error::Resource(format!("{total} weight entries exceed cap {cap}")));
    }
    let mut table = WeightTable::new();
    for e in 0..g.num_arcs() {
        let view = g.arc_view(e);
        let s = view.origin;
        let assignments: Box<dyn Iterator<Item = Vec<u32>>> = if s.is_empty() {
            Box::new(std::iter::once(Vec::new()))
        } else {
            Box::new(CubeIter::new(s.len(), m).map(|p| p.values().to_vec()))
        };
        for vals in assignments {
            let alpha = Assignment::new(s, vals)?;
            let v = w.weight(&view, &alpha)?;
            table.insert(e, &alpha, v);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Subset;
    use crate::graph::build_layered_graph;

    #[test]
    fn table_lookup_and_default() {
        let g = build_layered_graph(2, 2, |_| true, 100).unwrap();
        let e = g.find_arc(Subset::from_indices([0]), 1).unwrap();
        let mut t = WeightTable::new();
        let a: Assignment = "1=2".parse().unwrap();
        t.insert(e, &a, 3.0);
        assert_eq!(t.weight(&g.arc_view(e), &a).unwrap(), 3.0);
        let b: Assignment = "1=1".parse().unwrap();
        assert!(t.weight(&g.arc_view(e), &b).is_err());
        let t = t.with_default(0.5);
        assert_eq!(t.weight(&g.arc_view(e), &b).unwrap(), 0.5);
    }

    #[test]
    fn realize_rejects_negative() {
        let g = build_layered_graph(2, 1, |_| true, 100).unwrap();
        let x: InputPoint = "1,1".parse().unwrap();
        assert!(realize(&g, &UniformWeights(-1.0), &x).is_err());
        assert!(realize(&g, &UniformWeights(f64::NAN), &x).is_err());
        assert_eq!(realize(&g, &UniformWeights(2.0), &x).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn materialize_covers_cube() {
        let g = build_layered_graph(3, 2, |_| true, 100).unwrap();
        let w = FnWeights(|a: &ArcView, alpha: &Assignment| {
            1.0 + a.loaded as f64 + alpha.values().iter().sum::<u32>() as f64
        });
        let t: WeightTable = materialize_all(&g, &w, 2, 1000).unwrap();
        // 3 arcs from the root, 6 arcs from singletons with 2 assignments each
        assert_eq!(t.len(), 3 + 6 * 2);
        for x in CubeIter::new(3, 2) {
            assert_eq!(realize(&g, &t, &x).unwrap(), realize(&g, &w, &x).unwrap());
        }
        assert!(materialize_all::<f64, _>(&g, &w, 2, 5).is_err());
    }
}
