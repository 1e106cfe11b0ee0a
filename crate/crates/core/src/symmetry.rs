//! Arc classes under the symmetry group, group averaging of weights and
//! flows, flow transport, and weighting from per-class statistics.
//!
//! A symmetry `sigma` sends the arc `S -> S + j` to
//! `sigma(S) -> sigma(S) + sigma(j)` where indices move by
//! [`SymmetryElement::map_index`]; with that convention `(sigma x)` restricted
//! to `sigma(S)` is `sigma` applied to `x_S`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{full_group, Assignment, Domain, FunctionSpec, InputPoint, Subset, SymmetryElement};
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::graph::{ArcId, ArcView, LearningGraph};
use crate::scalar::Scalar;
use crate::weights::{realize, WeightFunction, WeightTable};

/// Largest group `n! m!` averaged exhaustively.
pub const DEFAULT_GROUP_CAP: u64 = 100_000;

/// Counts `b_t` of maximal equal-value groups of size `t < k` inside a vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Specification(pub Vec<usize>);

impl Specification {
    pub fn zero(k: usize) -> Self {
        Specification(vec![0; k - 1])
    }

    /// `b_t`, 1-based.
    pub fn get(&self, t: usize) -> usize {
        self.0[t - 1]
    }

    /// Number of indices, `sum_t t b_t`.
    pub fn size(&self) -> usize {
        self.0.iter().enumerate().map(|(i, b)| (i + 1) * b).sum()
    }

    pub fn k(&self) -> usize {
        self.0.len() + 1
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Specification of `x_S`, plus whether `S` holds `k` equal values.
pub fn specification_of(s: Subset, x: &InputPoint, k: usize) -> Result<(Specification, bool)> {
    if k < 2 {
        return Err(Error::input("k must be at least 2"));
    }
    if s.max_index().is_some_and(|i| i >= x.len()) {
        return Err(Error::input(format!("subset {s} exceeds input length {}", x.len())));
    }
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for i in s.iter() {
        *counts.entry(x.get(i)).or_default() += 1;
    }
    let mut b = vec![0; k - 1];
    let mut accepting = false;
    for c in counts.into_values() {
        if c >= k {
            accepting = true;
        } else {
            b[c - 1] += 1;
        }
    }
    Ok((Specification(b), accepting))
}

/// Where an index sits in a promised instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    /// Member of tuple number `id` of the block `A_size`.
    Tuple { size: usize, id: usize },
    /// One of the `k` equal marked elements.
    Marked,
    /// Promise slack, outside every block.
    Slack,
}

/// Block of every index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub k: usize,
    pub blocks: Vec<Block>,
}

impl BlockLayout {
    pub fn block(&self, i: usize) -> Block {
        self.blocks[i]
    }

    pub fn indices_where(&self, pred: impl Fn(Block) -> bool) -> Subset {
        Subset::from_indices((0..self.blocks.len()).filter(|&i| pred(self.blocks[i])))
    }

    pub fn marked(&self) -> Subset {
        self.indices_where(|b| b == Block::Marked)
    }

    /// `A_{>=1}`, the union of the tuple blocks.
    pub fn tuple_indices(&self) -> Subset {
        self.indices_where(|b| matches!(b, Block::Tuple { .. }))
    }
}

/// `(k-1) x k` matrix: entry `(t, s)` counts `t`-subtuples of the vertex in
/// block `A_s`, with column `k` standing for the marked block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeMatrix {
    k: usize,
    entries: Vec<usize>,
}

impl TypeMatrix {
    pub fn zero(k: usize) -> Self {
        TypeMatrix {
            k,
            entries: vec![0; (k - 1) * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Entry for `1 <= t <= k-1`, `1 <= s <= k`.
    pub fn get(&self, t: usize, s: usize) -> usize {
        self.entries[(t - 1) * self.k + (s - 1)]
    }

    pub fn set(&mut self, t: usize, s: usize, v: usize) {
        self.entries[(t - 1) * self.k + (s - 1)] = v;
    }

    pub fn specification(&self) -> Specification {
        Specification(
            (1..self.k)
                .map(|t| (1..=self.k).map(|s| self.get(t, s)).sum())
                .collect(),
        )
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }
}

impl fmt::Display for TypeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for t in 1..self.k {
            if t > 1 {
                write!(f, ";")?;
            }
            for s in 1..=self.k {
                if s > 1 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(t, s))?;
            }
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexType {
    Type(TypeMatrix),
    /// The vertex holds a slack index; flows never use it.
    Unsupported,
    /// The vertex holds `k` equal values.
    Accepting,
}

pub fn type_of(s: Subset, x: &InputPoint, layout: &BlockLayout) -> Result<VertexType> {
    let k = layout.k;
    if x.len() != layout.blocks.len() {
        return Err(Error::input("input and layout lengths differ"));
    }
    let mut groups: HashMap<u32, (usize, usize)> = HashMap::new(); // value -> (column, count)
    for i in s.iter() {
        let column = match layout.block(i) {
            Block::Slack => return Ok(VertexType::Unsupported),
            Block::Marked => k,
            Block::Tuple { size, .. } => size,
        };
        let entry = groups.entry(x.get(i)).or_insert((column, 0));
        if entry.0 != column {
            return Err(Error::input(format!(
                "value {} spans two blocks; the input does not realise the layout",
                x.get(i)
            )));
        }
        entry.1 += 1;
    }
    let mut m = TypeMatrix::zero(k);
    for (column, count) in groups.into_values() {
        if count >= k {
            return Ok(VertexType::Accepting);
        }
        m.set(count, column, m.get(count, column) + 1);
    }
    Ok(VertexType::Type(m))
}

/// `max_{t,s} |a_{t,s} - b_{t,s}|`.
pub fn type_distance(a: &TypeMatrix, b: &TypeMatrix) -> Result<usize> {
    if a.k != b.k {
        return Err(Error::input("type matrices of different dimensions"));
    }
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassMode {
    BySize,
    BySpecification,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKey {
    Size(usize),
    Spec(Specification),
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKey::Size(s) => write!(f, "size{s}"),
            ClassKey::Spec(b) => write!(f, "spec{b}"),
        }
    }
}

/// Class of an arc for input `x`; only the origin matters.
pub fn class_key(arc: &ArcView, x: &InputPoint, k: usize, mode: ClassMode) -> Result<ClassKey> {
    Ok(match mode {
        ClassMode::BySize => ClassKey::Size(arc.origin.len()),
        ClassMode::BySpecification => ClassKey::Spec(specification_of(arc.origin, x, k)?.0),
    })
}

/// Which group elements to average over.
#[derive(Clone, Copy, Debug)]
pub enum GroupMode {
    /// All of `S_n x S_m`, refused above `cap` elements.
    Full { cap: u64 },
    /// `size` uniformly random elements from a seeded stream.
    Sampled { size: usize, seed: u64 },
}

pub fn group_elements(n: usize, m: u32, mode: GroupMode) -> Result<Vec<SymmetryElement>> {
    match mode {
        GroupMode::Full { cap } => full_group(n, m, cap),
        GroupMode::Sampled { size, seed } => {
            if size == 0 {
                return Err(Error::input("sample at least one group element"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..size).map(|_| SymmetryElement::random(n, m, &mut rng)).collect())
        }
    }
}

fn image_arc(g: &LearningGraph, sigma: &SymmetryElement, e: ArcId) -> Result<ArcId> {
    let v = g.arc_view(e);
    let origin = sigma.map_subset(v.origin);
    let loaded = sigma.map_index(v.loaded);
    g.find_arc(origin, loaded).ok_or_else(|| {
        Error::input(format!(
            "graph is not closed under the symmetry: arc {} + {} has no image",
            v.origin,
            v.loaded + 1
        ))
    })
}

/// Arc permutation induced by each group element.
fn arc_images(g: &LearningGraph, group: &[SymmetryElement]) -> Result<Vec<Vec<ArcId>>> {
    group
        .iter()
        .map(|sigma| (0..g.num_arcs()).map(|e| image_arc(g, sigma, e)).collect())
        .collect()
}

/// Group-averaged weights and flows:
/// `w'_e(a) = avg_sigma w_{sigma e}(sigma a)` and
/// `p'_e(x) = avg_sigma p_{sigma e}(sigma x)`.
///
/// The new weights are tabulated on every assignment realised by the domain;
/// flows must be supplied for every image `sigma x` of a positive input.
pub fn symmetrize<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    flows: &[Flow<T>],
    domain: &Domain,
    group: &[SymmetryElement],
) -> Result<(WeightTable<T>, Vec<Flow<T>>)> {
    if group.is_empty() {
        return Err(Error::input("empty group"));
    }
    let images = arc_images(g, group)?;
    let size = T::from_count(group.len());
    let by_input: HashMap<&InputPoint, &Flow<T>> = flows.iter().map(|p| (&p.input, p)).collect();
    let mut table = WeightTable::new();
    let mut new_flows = Vec::new();
    for (x, positive) in domain.points() {
        let mut wsum = vec![T::zero(); g.num_arcs()];
        let mut psum = vec![T::zero(); g.num_arcs()];
        for (sigma, image) in group.iter().zip(&images) {
            let sx = sigma.apply(x)?;
            let realized = realize(g, w, &sx)?;
            let p = if *positive {
                Some(by_input.get(&sx).ok_or_else(|| {
                    Error::input(format!("no flow for {sx}, the image of {x}"))
                })?)
            } else {
                None
            };
            for e in 0..g.num_arcs() {
                let se = image[e];
                wsum[e] = wsum[e].clone() + realized[se].clone();
                if let Some(p) = p {
                    psum[e] = psum[e].clone() + p.values[se].clone();
                }
            }
        }
        for (e, total) in wsum.into_iter().enumerate() {
            let alpha = Assignment::of(x, g.arc_view(e).origin);
            table.insert(e, &alpha, total / size.clone());
        }
        if *positive {
            new_flows.push(Flow {
                input: x.clone(),
                values: psum.into_iter().map(|v| v / size.clone()).collect(),
            });
        }
    }
    Ok((table, new_flows))
}

/// Moves the flow for `x` onto `sigma x`: arc `sigma e` receives `p_e`.
///
/// Sound only if the weights and accepting vertices are preserved along the
/// way; both are checked and any mismatch is reported.
pub fn transport_flow<T: Scalar, W: WeightFunction<T> + ?Sized>(
    g: &LearningGraph,
    w: &W,
    f: &FunctionSpec,
    sigma: &SymmetryElement,
    flow: &Flow<T>,
) -> Result<Flow<T>> {
    let x = &flow.input;
    let sx = sigma.apply(x)?;
    if f.evaluate(x)? != f.evaluate(&sx)? {
        return Err(Error::TransportUnsound(format!("f({x}) differs from f({sx})")));
    }
    for &s in g.vertices() {
        let image = sigma.map_subset(s);
        if g.vertex_id(image).is_none() {
            return Err(Error::TransportUnsound(format!("vertex {s} has no image {image}")));
        }
        if f.is_accepting(x, s)? != f.is_accepting(&sx, image)? {
            return Err(Error::TransportUnsound(format!(
                "accepting status of {s} for {x} differs from {image} for {sx}"
            )));
        }
    }
    let before = realize(g, w, x)?;
    let after = realize(g, w, &sx)?;
    let mut values = vec![T::zero(); g.num_arcs()];
    for e in 0..g.num_arcs() {
        let se = image_arc(g, sigma, e).map_err(|e| Error::TransportUnsound(e.to_string()))?;
        if !flow.values[e].is_zero() && before[e] != after[se] {
            return Err(Error::TransportUnsound(format!(
                "arc {e} has weight {:?} for {x} but its image {se} has {:?} for {sx}",
                before[e], after[se]
            )));
        }
        values[se] = flow.values[e].clone();
    }
    Ok(Flow { input: sx, values })
}

/// Orbits of `inputs` under `group`, each sorted, in order of first member.
pub fn orbits(inputs: &[InputPoint], group: &[SymmetryElement]) -> Result<Vec<Vec<InputPoint>>> {
    let mut seen: HashSet<InputPoint> = HashSet::new();
    let mut out = Vec::new();
    for x in inputs {
        if seen.contains(x) {
            continue;
        }
        let mut orbit: Vec<InputPoint> = Vec::new();
        for sigma in group {
            let sx = sigma.apply(x)?;
            if seen.insert(sx.clone()) {
                orbit.push(sx);
            }
        }
        if seen.insert(x.clone()) {
            orbit.push(x.clone());
        }
        orbit.sort_by(|a, b| a.values().cmp(b.values()));
        out.push(orbit);
    }
    Ok(out)
}

/// Statistics of one arc class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub key: String,
    pub step: usize,
    /// Typical flow through one arc of the class.
    pub pi: f64,
    /// Speciality.
    pub tau: f64,
    /// Typical total flow through the class.
    pub mu: f64,
    pub count: f64,
}

#[derive(Clone, Debug)]
pub struct ClassWeighting {
    /// `pi / sqrt(tau)` per class key.
    pub weights: BTreeMap<String, f64>,
    /// `sum_E mu(E) sqrt(tau(E))`.
    pub estimate: f64,
    /// `sum_i sqrt(T_i)` with `T_i` the largest speciality on step `i`.
    pub step_bound: f64,
}

pub fn weight_from_class_stats(stats: &[ClassStats]) -> Result<ClassWeighting> {
    let mut weights = BTreeMap::new();
    let mut estimate = 0.0;
    let mut step_max: BTreeMap<usize, f64> = BTreeMap::new();
    for c in stats {
        if !(c.tau > 0.0) {
            return Err(Error::input(format!("class {} has speciality {}", c.key, c.tau)));
        }
        if c.pi < 0.0 || c.mu < 0.0 {
            return Err(Error::input(format!("class {} has a negative statistic", c.key)));
        }
        weights.insert(c.key.clone(), c.pi / c.tau.sqrt());
        estimate += c.mu * c.tau.sqrt();
        let t = step_max.entry(c.step).or_insert(0.0);
        *t = t.max(c.tau);
    }
    Ok(ClassWeighting {
        weights,
        estimate,
        step_bound: step_max.values().map(|t| t.sqrt()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_layered_graph;

    fn pt(s: &str) -> InputPoint {
        s.parse().unwrap()
    }

    #[test]
    fn specifications() {
        let (b, acc) = specification_of(Subset::full(3), &pt("5,5,7"), 3).unwrap();
        assert_eq!((b, acc), (Specification(vec![1, 1]), false));
        let (b, _) = specification_of(Subset::EMPTY, &pt("5,5,7"), 3).unwrap();
        assert_eq!(b, Specification(vec![0, 0]));
        let (b, _) = specification_of(Subset::from_indices([0, 1]), &pt("1,2,3"), 3).unwrap();
        assert_eq!(b, Specification(vec![2, 0]));
        let (_, acc) = specification_of(Subset::full(3), &pt("5,5,5,7"), 3).unwrap();
        assert!(acc);
        assert_eq!(Specification(vec![1, 1]).size(), 3);
    }

    #[test]
    fn types() {
        // A_2 = {1,2}, M = {3,4,5}
        let layout = BlockLayout {
            k: 3,
            blocks: vec![
                Block::Tuple { size: 2, id: 0 },
                Block::Tuple { size: 2, id: 0 },
                Block::Marked,
                Block::Marked,
                Block::Marked,
                Block::Slack,
            ],
        };
        let x = pt("1,1,2,2,2,3");
        let t = |s: &[usize]| type_of(Subset::from_indices(s.iter().copied()), &x, &layout).unwrap();
        let VertexType::Type(m) = t(&[0, 1]) else { panic!() };
        assert_eq!(m.get(2, 2), 1);
        assert_eq!(m.entries().iter().sum::<usize>(), 1);
        let VertexType::Type(m) = t(&[0]) else { panic!() };
        assert_eq!(m.get(1, 2), 1);
        let VertexType::Type(m) = t(&[2, 3]) else { panic!() };
        assert_eq!(m.get(2, 3), 1);
        assert_eq!(t(&[5]), VertexType::Unsupported);
        assert_eq!(t(&[2, 3, 4]), VertexType::Accepting);
    }

    #[test]
    fn distances() {
        let a = TypeMatrix::zero(3);
        let mut b = a.clone();
        b.set(1, 2, 3);
        assert_eq!(type_distance(&a, &a).unwrap(), 0);
        assert_eq!(type_distance(&a, &b).unwrap(), 3);
        assert!(type_distance(&a, &TypeMatrix::zero(4)).is_err());
    }

    #[test]
    fn class_keys() {
        let g = build_layered_graph(4, 4, |_| true, 100).unwrap();
        let x = pt("1,1,2,2");
        let e1 = g.arc_view(g.find_arc(Subset::from_indices([0, 1, 2]), 3).unwrap());
        let e2 = g.arc_view(g.find_arc(Subset::from_indices([1, 2, 3]), 0).unwrap());
        assert_eq!(
            class_key(&e1, &x, 3, ClassMode::BySize).unwrap(),
            class_key(&e2, &x, 3, ClassMode::BySize).unwrap()
        );
        let y = pt("1,2,3,4");
        assert_ne!(
            class_key(&e1, &x, 3, ClassMode::BySpecification).unwrap(),
            class_key(&e1, &y, 3, ClassMode::BySpecification).unwrap()
        );
        let e3 = g.arc_view(g.find_arc(Subset::from_indices([0]), 1).unwrap());
        let e4 = g.arc_view(g.find_arc(Subset::from_indices([0]), 2).unwrap());
        for mode in [ClassMode::BySize, ClassMode::BySpecification] {
            assert_eq!(class_key(&e3, &x, 3, mode).unwrap(), class_key(&e4, &x, 3, mode).unwrap());
        }
    }

    #[test]
    fn class_weighting() {
        let one = ClassStats {
            key: "a".into(),
            step: 1,
            pi: 1.0,
            tau: 4.0,
            mu: 1.5,
            count: 1.0,
        };
        let w = weight_from_class_stats(std::slice::from_ref(&one)).unwrap();
        assert_eq!(w.weights["a"], 0.5);
        assert_eq!(w.estimate, 3.0);
        let mut two = one.clone();
        two.key = "b".into();
        two.step = 2;
        let w2 = weight_from_class_stats(&[one.clone(), two]).unwrap();
        assert_eq!(w2.estimate, 2.0 * w.estimate);
        let mut bad = one;
        bad.tau = 0.0;
        assert!(weight_from_class_stats(&[bad]).is_err());
    }

    #[test]
    fn orbit_partition() {
        let xs: Vec<InputPoint> = crate::domain::CubeIter::new(2, 2).collect();
        let group = full_group(2, 2, 100).unwrap();
        let o = orbits(&xs, &group).unwrap();
        assert_eq!(o.len(), 2);
        assert_eq!(o.iter().map(|v| v.len()).sum::<usize>(), 4);
    }
}
