//! Layered subset graphs.
//!
//! Vertices are subsets of `[n]`; an arc joins `S` to `S ∪ {j}` and "loads"
//! `j`. Arcs always increase cardinality by one, so the graph is acyclic and
//! layered by `|S|` whatever order vertices were inserted in.

use std::collections::HashMap;

use crate::combinatorics::Combinations;
use crate::error::{Error, Result};

pub use crate::domain::Subset;

pub type VertexId = usize;
pub type ArcId = usize;

/// Default cap on the number of vertices of a built graph.
pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub origin: VertexId,
    pub target: VertexId,
    pub loaded: usize,
}

/// What a weight function may see of an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcView {
    pub id: ArcId,
    pub origin: Subset,
    pub loaded: usize,
}

#[derive(Clone, Debug)]
pub struct LearningGraph {
    n: usize,
    vertices: Vec<Subset>,
    index: HashMap<Subset, VertexId>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
}

impl LearningGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest vertex cardinality.
    pub fn depth(&self) -> usize {
        self.vertices.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn vertices(&self) -> &[Subset] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> Subset {
        self.vertices[v]
    }

    pub fn vertex_id(&self, s: Subset) -> Option<VertexId> {
        self.index.get(&s).copied()
    }

    pub fn root(&self) -> VertexId {
        self.index[&Subset::EMPTY]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, e: ArcId) -> Arc {
        self.arcs[e]
    }

    pub fn arc_view(&self, e: ArcId) -> ArcView {
        let a = self.arcs[e];
        ArcView {
            id: e,
            origin: self.vertices[a.origin],
            loaded: a.loaded,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn out_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.in_arcs[v]
    }

    /// The arc `S -> S ∪ {j}`, if present.
    pub fn find_arc(&self, origin: Subset, loaded: usize) -> Option<ArcId> {
        let v = self.vertex_id(origin)?;
        self.out_arcs[v]
            .iter()
            .copied()
            .find(|&e| self.arcs[e].loaded == loaded)
    }

    /// Vertex ids sorted by cardinality (a topological order).
    pub fn layer_order(&self) -> Vec<VertexId> {
        let mut order: Vec<VertexId> = (0..self.vertices.len()).collect();
        order.sort_by_key(|&v| (self.vertices[v].len(), v));
        order
    }

    /// Arcs ending in a vertex of cardinality `i` (the `i`-th step).
    pub fn step_arcs(&self, i: usize) -> impl Iterator<Item = ArcId> + '_ {
        (0..self.arcs.len()).filter(move |&e| self.vertices[self.arcs[e].target].len() == i)
    }
}

/// Incremental construction with structural validation.
#[derive(Debug)]
pub struct GraphBuilder {
    n: usize,
    vertices: Vec<Subset>,
    index: HashMap<Subset, VertexId>,
    arcs: Vec<(Subset, usize)>,
    arc_set: std::collections::HashSet<(Subset, usize)>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::input(format!("graphs need 1 <= n <= 64, got {n}")));
        }
        Ok(GraphBuilder {
            n,
            vertices: Vec::new(),
            index: HashMap::new(),
            arcs: Vec::new(),
            arc_set: Default::default(),
        })
    }

    pub fn add_vertex(&mut self, s: Subset) -> Result<()> {
        if s.max_index().is_some_and(|i| i >= self.n) {
            return Err(Error::input(format!("vertex {s} is not a subset of [{}]", self.n)));
        }
        if self.index.insert(s, self.vertices.len()).is_some() {
            return Err(Error::input(format!("duplicate vertex {s}")));
        }
        self.vertices.push(s);
        Ok(())
    }

    pub fn add_arc(&mut self, origin: Subset, loaded: usize) -> Result<()> {
        if loaded >= self.n || origin.contains(loaded) {
            return Err(Error::input(format!(
                "arc from {origin} cannot load index {}",
                loaded + 1
            )));
        }
        for s in [origin, origin.with(loaded)] {
            if !self.index.contains_key(&s) {
                return Err(Error::input(format!("arc endpoint {s} is not a vertex")));
            }
        }
        if !self.arc_set.insert((origin, loaded)) {
            return Err(Error::input(format!("duplicate arc {origin} + {}", loaded + 1)));
        }
        self.arcs.push((origin, loaded));
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Finalises the graph; vertex and arc ids follow insertion order.
    pub fn build(self) -> Result<LearningGraph> {
        if !self.index.contains_key(&Subset::EMPTY) {
            return Err(Error::input("the empty set must be a vertex"));
        }
        let nv = self.vertices.len();
        let mut out_arcs = vec![Vec::new(); nv];
        let mut in_arcs = vec![Vec::new(); nv];
        let arcs = self
            .arcs
            .iter()
            .enumerate()
            .map(|(id, &(origin, loaded))| {
                let o = self.index[&origin];
                let t = self.index[&origin.with(loaded)];
                out_arcs[o].push(id);
                in_arcs[t].push(id);
                Arc {
                    origin: o,
                    target: t,
                    loaded,
                }
            })
            .collect();
        Ok(LearningGraph {
            n: self.n,
            vertices: self.vertices,
            index: self.index,
            arcs,
            out_arcs,
            in_arcs,
        })
    }
}

/// All subsets of `[n]` of size at most `depth` admitted by `filter`, with
/// every arc between admitted vertices of consecutive layers.
pub fn build_layered_graph(
    n: usize,
    depth: usize,
    filter: impl Fn(Subset) -> bool,
    vertex_cap: usize,
) -> Result<LearningGraph> {
    if depth > n {
        return Err(Error::input(format!("depth {depth} exceeds n = {n}")));
    }
    if !filter(Subset::EMPTY) {
        return Err(Error::input("vertex filter must admit the empty set"));
    }
    let mut b = GraphBuilder::new(n)?;
    let mut scanned = 0usize;
    for size in 0..=depth {
        for bits in Combinations::new(n, size) {
            scanned += 1;
            if scanned > vertex_cap.saturating_mul(64) {
                return Err(Error::Resource(format!(
                    "scanning more than {} candidate vertices",
                    vertex_cap.saturating_mul(64)
                )));
            }
            let s = Subset::from_bits(bits);
            if filter(s) {
                if b.num_vertices() >= vertex_cap {
                    return Err(Error::Resource(format!("graph exceeds {vertex_cap} vertices")));
                }
                b.add_vertex(s)?;
            }
        }
    }
    let vertices = b.vertices.clone();
    for s in vertices {
        if s.len() == depth {
            continue;
        }
        for j in (0..n).filter(|&j| !s.contains(j)) {
            if b.index.contains_key(&s.with(j)) {
                b.add_arc(s, j)?;
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattices() {
        let g = build_layered_graph(2, 1, |_| true, 100).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_arcs(), 2);
        assert!(g.find_arc(Subset::EMPTY, 0).is_some());
        assert!(g.find_arc(Subset::EMPTY, 1).is_some());

        let g = build_layered_graph(3, 3, |_| true, 100).unwrap();
        assert_eq!(g.num_vertices(), 8);
        assert_eq!(g.num_arcs(), 12);
        for a in g.arcs() {
            assert!(a.origin < a.target);
            assert_eq!(g.vertex(a.origin).with(a.loaded), g.vertex(a.target));
        }

        let three = Subset::from_indices([2]);
        let g = build_layered_graph(3, 2, |s| s != three, 100).unwrap();
        assert!(g.vertex_id(three).is_none());
        assert!(g.arcs().iter().all(|a| g.vertex(a.origin) != three && g.vertex(a.target) != three));
        // {1,3} is still reachable through {1}
        assert!(g.find_arc(Subset::from_indices([0]), 2).is_some());
        assert_eq!(g.step_arcs(1).count(), 2);
    }

    #[test]
    fn builder_errors() {
        assert!(build_layered_graph(3, 4, |_| true, 100).is_err());
        assert!(build_layered_graph(3, 2, |s| !s.is_empty(), 100).is_err());
        assert!(matches!(
            build_layered_graph(10, 10, |_| true, 100),
            Err(Error::Resource(_))
        ));
        let mut b = GraphBuilder::new(2).unwrap();
        b.add_vertex(Subset::EMPTY).unwrap();
        assert!(b.add_arc(Subset::EMPTY, 0).is_err());
        assert!(b.add_vertex(Subset::EMPTY).is_err());
        assert!(b.add_vertex(Subset::from_indices([5])).is_err());
        let mut b = GraphBuilder::new(2).unwrap();
        b.add_vertex(Subset::from_indices([0])).unwrap();
        assert!(b.build().is_err());
    }
}
