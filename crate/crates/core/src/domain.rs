//! Input domains, the k-distinctness family and the symmetry group action.
//!
//! Indices are 0-based internally and 1-based in every textual format;
//! alphabet symbols are the contiguous integers `1..=m`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Default bound on `m^n` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

/// A subset of `[n]` for `n <= 64`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Subset(indices.into_iter().fold(0u64, |acc, i| {
            assert!(i < 64, "index {i} out of range");
            acc | (1 << i)
        }))
    }

    /// All of `{0..n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= 64);
        if n == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Self {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Self {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Self {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    /// Indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }
}

/// `-` for the empty set, otherwise 1-based indices joined by commas.
impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let mut first = true;
        for i in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Subset::EMPTY);
        }
        let mut out = Subset::EMPTY;
        let mut last = 0usize;
        for tok in s.split(',') {
            let i: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("bad index {tok:?} in subset {s:?}")))?;
            if i == 0 || i > 64 {
                return Err(Error::input(format!("index {i} outside 1..=64")));
            }
            if i <= last {
                return Err(Error::input(format!("subset {s:?} is not strictly increasing")));
            }
            last = i;
            out = out.with(i - 1);
        }
        Ok(out)
    }
}

/// A point `x in [m]^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputPoint(Vec<u32>);

impl InputPoint {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("input point must have at least one symbol"));
        }
        if values.contains(&0) {
            return Err(Error::input("symbols are 1-based"));
        }
        Ok(InputPoint(values))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Values on `s` in increasing index order.
    pub fn restrict(&self, s: Subset) -> Vec<u32> {
        s.iter().map(|i| self.0[i]).collect()
    }

    /// Indices where the two points differ.
    pub fn difference_set(&self, other: &InputPoint) -> Subset {
        Subset::from_indices(
            self.0
                .iter()
                .zip(&other.0)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(i, _)| i),
        )
    }

    pub fn max_symbol(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for InputPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for InputPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for InputPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .trim()
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::input(format!("bad symbol {tok:?} in input {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        InputPoint::new(values)
    }
}

/// A partial input: values fixed on `domain`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    domain: Subset,
    values: Vec<u32>,
}

impl Assignment {
    pub fn new(domain: Subset, values: Vec<u32>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::input(format!(
                "assignment on {domain} needs {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        Ok(Assignment { domain, values })
    }

    /// The assignment `x_S`.
    pub fn of(x: &InputPoint, s: Subset) -> Self {
        Assignment {
            domain: s,
            values: x.restrict(s),
        }
    }

    pub fn domain(&self) -> Subset {
        self.domain
    }

    /// Values in increasing index order.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<u32> {
        if !self.domain.contains(i) {
            return None;
        }
        let rank = (self.domain.bits() & ((1u64 << i) - 1)).count_ones() as usize;
        Some(self.values[rank])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.domain.iter().zip(self.values.iter().copied())
    }

    /// Size of the largest group of equal values.
    pub fn max_multiplicity(&self) -> usize {
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &v in &self.values {
            *counts.entry(v).or_default() += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }
}

/// `i=v` pairs (1-based) joined by commas, or `-` when empty.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.domain.is_empty() {
            return f.write_str("-");
        }
        for (n, (i, v)) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", i + 1, v)?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Assignment {
                domain: Subset::EMPTY,
                values: Vec::new(),
            });
        }
        let mut domain = Subset::EMPTY;
        let mut values = Vec::new();
        let mut last = 0usize;
        for pair in s.split(',') {
            let (i, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected i=v, got {pair:?}")))?;
            let i: usize = i.trim().parse().map_err(|_| Error::input(format!("bad index {i:?}")))?;
            let v: u32 = v.trim().parse().map_err(|_| Error::input(format!("bad value {v:?}")))?;
            if i == 0 || i > 64 || i <= last {
                return Err(Error::input(format!("assignment indices must increase within 1..=64: {s:?}")));
            }
            if v == 0 {
                return Err(Error::input("symbols are 1-based"));
            }
            last = i;
            domain = domain.with(i - 1);
            values.push(v);
        }
        Ok(Assignment { domain, values })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    /// 1 iff some value occurs at least `k` times.
    KDistinctness { k: usize },
    /// Truth table over `[m]^n` in lexicographic order, `x_1` most significant.
    Table(Vec<bool>),
}

/// A Boolean function on `[m]^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    n: usize,
    m: u32,
    kind: FunctionKind,
}

impl FunctionSpec {
    pub fn k_distinctness(k: usize, n: usize, m: u32) -> Result<Self> {
        // k > n is admitted: the function is then identically 0
        if k < 2 {
            return Err(Error::input(format!("k-distinctness needs k >= 2, got k={k}")));
        }
        Self::check_dims(n, m)?;
        Ok(FunctionSpec {
            n,
            m,
            kind: FunctionKind::KDistinctness { k },
        })
    }

    pub fn element_distinctness(n: usize, m: u32) -> Result<Self> {
        Self::k_distinctness(2, n, m)
    }

    pub fn truth_table(n: usize, m: u32, table: Vec<bool>) -> Result<Self> {
        Self::check_dims(n, m)?;
        let expected = (m as u128).checked_pow(n as u32).filter(|&c| c <= 1 << 24);
        if expected != Some(table.len() as u128) {
            return Err(Error::input(format!(
                "truth table for n={n}, m={m} needs m^n entries (at most 2^24), got {}",
                table.len()
            )));
        }
        Ok(FunctionSpec {
            n,
            m,
            kind: FunctionKind::Table(table),
        })
    }

    /// Truth table built by evaluating `pred` on every point of the cube.
    pub fn from_predicate(n: usize, m: u32, pred: impl Fn(&InputPoint) -> bool) -> Result<Self> {
        Self::check_dims(n, m)?;
        let table = CubeIter::new(n, m).map(|x| pred(&x)).collect();
        Self::truth_table(n, m, table)
    }

    fn check_dims(n: usize, m: u32) -> Result<()> {
        if n == 0 || n > 64 {
            return Err(Error::input(format!("n must be in 1..=64, got {n}")));
        }
        if m == 0 {
            return Err(Error::input("alphabet size m must be positive"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    /// `Some(k)` for the k-distinctness family.
    pub fn k(&self) -> Option<usize> {
        match self.kind {
            FunctionKind::KDistinctness { k } => Some(k),
            FunctionKind::Table(_) => None,
        }
    }

    /// Whether the full `S_n x S_m` group preserves the function.
    pub fn is_fully_symmetric(&self) -> bool {
        matches!(self.kind, FunctionKind::KDistinctness { .. })
    }

    pub fn check_input(&self, x: &InputPoint) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::input(format!("input {x} has length {}, expected n={}", x.len(), self.n)));
        }
        if x.max_symbol() > self.m {
            return Err(Error::input(format!("input {x} uses a symbol above m={}", self.m)));
        }
        Ok(())
    }

    fn table_index(&self, values: impl Iterator<Item = u32>) -> usize {
        values.fold(0usize, |acc, v| acc * self.m as usize + (v - 1) as usize)
    }

    pub fn evaluate(&self, x: &InputPoint) -> Result<bool> {
        self.check_input(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    fn evaluate_unchecked(&self, x: &InputPoint) -> bool {
        match &self.kind {
            FunctionKind::KDistinctness { k } => {
                Assignment::of(x, Subset::full(self.n)).max_multiplicity() >= *k
            }
            FunctionKind::Table(t) => t[self.table_index(x.values().iter().copied())],
        }
    }

    /// Whether `x_S` is a 1-certificate.
    pub fn is_accepting(&self, x: &InputPoint, s: Subset) -> Result<bool> {
        self.check_input(x)?;
        if s.max_index().is_some_and(|i| i >= self.n) {
            return Err(Error::input(format!("subset {s} is not contained in [{}]", self.n)));
        }
        Ok(self.is_accepting_unchecked(x, s))
    }

    pub(crate) fn is_accepting_unchecked(&self, x: &InputPoint, s: Subset) -> bool {
        match &self.kind {
            FunctionKind::KDistinctness { k } => Assignment::of(x, s).max_multiplicity() >= *k,
            FunctionKind::Table(t) => {
                // every completion of x_S must evaluate to 1
                let free: Vec<usize> = (0..self.n).filter(|&i| !s.contains(i)).collect();
                let mut cur = x.values().to_vec();
                for &i in &free {
                    cur[i] = 1;
                }
                loop {
                    if !t[self.table_index(cur.iter().copied())] {
                        return false;
                    }
                    let mut pos = free.len();
                    loop {
                        if pos == 0 {
                            return true;
                        }
                        pos -= 1;
                        let i = free[pos];
                        if cur[i] < self.m {
                            cur[i] += 1;
                            break;
                        }
                        cur[i] = 1;
                    }
                }
            }
        }
    }

    /// Number of points in the cube, if it fits in `u64`.
    pub fn cube_size(&self) -> Option<u64> {
        (self.m as u64).checked_pow(self.n as u32)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FunctionKind::KDistinctness { k } => write!(f, "kdist:k={k},n={},m={}", self.n, self.m),
            FunctionKind::Table(t) => {
                write!(f, "table:n={},m={},bits=", self.n, self.m)?;
                for &b in t {
                    f.write_str(if b { "1" } else { "0" })?;
                }
                Ok(())
            }
        }
    }
}

/// Accepts `kdist:k=3,n=6,m=6`, `ed:n=4,m=4` and `table:n=2,m=2,bits=0111`.
impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::input(format!("function spec {s:?} lacks a family prefix")))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected key=value in {s:?}, got {kv:?}")))?;
            if fields.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::input(format!("duplicate key {k:?} in {s:?}")));
            }
        }
        let mut take_num = |key: &str| -> Result<u64> {
            let v = fields
                .remove(key)
                .ok_or_else(|| Error::input(format!("function spec {s:?} is missing {key}")))?;
            v.parse::<u64>()
                .map_err(|_| Error::input(format!("bad value {v:?} for {key}")))
        };
        let spec = match family.trim() {
            "kdist" => {
                let k = take_num("k")?;
                let n = take_num("n")?;
                let m = take_num("m")?;
                let (k, n, m) = small_dims(k, n, m)?;
                FunctionSpec::k_distinctness(k, n, m)?
            }
            "ed" => {
                let n = take_num("n")?;
                let m = take_num("m")?;
                let (_, n, m) = small_dims(2, n, m)?;
                FunctionSpec::element_distinctness(n, m)?
            }
            "table" => {
                let n = take_num("n")?;
                let m = take_num("m")?;
                let (_, n, m) = small_dims(0, n, m)?;
                let bits = fields
                    .remove("bits")
                    .ok_or_else(|| Error::input("table spec needs bits="))?;
                let table = bits
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::input(format!("bad truth-table digit {c:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                FunctionSpec::truth_table(n, m, table)?
            }
            other => return Err(Error::input(format!("unknown function family {other:?}"))),
        };
        if let Some(k) = fields.keys().next() {
            return Err(Error::input(format!("unknown key {k:?} in function spec")));
        }
        Ok(spec)
    }
}

fn small_dims(k: u64, n: u64, m: u64) -> Result<(usize, usize, u32)> {
    if n > 64 || k > 64 || m > u32::MAX as u64 {
        return Err(Error::input(format!("dimensions out of range: k={k}, n={n}, m={m}")));
    }
    Ok((k as usize, n as usize, m as u32))
}

/// Lexicographic iterator over `[m]^n`.
pub struct CubeIter {
    next: Option<Vec<u32>>,
    m: u32,
}

impl CubeIter {
    pub fn new(n: usize, m: u32) -> Self {
        CubeIter {
            next: (n > 0 && m > 0).then(|| vec![1; n]),
            m,
        }
    }
}

impl Iterator for CubeIter {
    type Item = InputPoint;

    fn next(&mut self) -> Option<InputPoint> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let mut pos = nxt.len();
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            if nxt[pos] < self.m {
                nxt[pos] += 1;
                done = false;
                break;
            }
            nxt[pos] = 1;
        }
        if !done {
            self.next = Some(nxt);
        }
        Some(InputPoint(cur))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputClass {
    Positive,
    Negative,
    All,
}

/// Every point of the cube in `class`, lexicographically.
pub fn enumerate_inputs(
    f: &FunctionSpec,
    class: InputClass,
    cap: u64,
) -> Result<impl Iterator<Item = InputPoint> + '_> {
    match f.cube_size() {
        Some(size) if size <= cap => {}
        _ => {
            return Err(Error::Resource(format!(
                "{}^{} inputs exceed the enumeration cap {cap}",
                f.m, f.n
            )))
        }
    }
    Ok(CubeIter::new(f.n, f.m).filter(move |x| match class {
        InputClass::All => true,
        InputClass::Positive => f.evaluate_unchecked(x),
        InputClass::Negative => !f.evaluate_unchecked(x),
    }))
}

/// The inputs a graph is evaluated and certified on, with their values.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: FunctionSpec,
    points: Vec<(InputPoint, bool)>,
}

impl Domain {
    /// The whole cube `[m]^n`.
    pub fn cube(f: &FunctionSpec, cap: u64) -> Result<Self> {
        let points = enumerate_inputs(f, InputClass::All, cap)?
            .map(|x| {
                let v = f.evaluate_unchecked(&x);
                (x, v)
            })
            .collect();
        Ok(Domain {
            spec: f.clone(),
            points,
        })
    }

    /// An explicit list of points, deduplicated in first-seen order.
    pub fn explicit(f: &FunctionSpec, inputs: impl IntoIterator<Item = InputPoint>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut points = Vec::new();
        for x in inputs {
            let v = f.evaluate(&x)?;
            if seen.insert(x.clone()) {
                points.push((x, v));
            }
        }
        Ok(Domain {
            spec: f.clone(),
            points,
        })
    }

    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn points(&self) -> &[(InputPoint, bool)] {
        &self.points
    }

    pub fn positives(&self) -> impl Iterator<Item = &InputPoint> {
        self.points.iter().filter(|(_, v)| *v).map(|(x, _)| x)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &InputPoint> {
        self.points.iter().filter(|(_, v)| !*v).map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `sigma = (index permutation, value permutation)` acting by
/// `(sigma x)_i = value_perm(x_{index_perm(i)})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymmetryElement {
    index_perm: Vec<usize>,
    index_inv: Vec<usize>,
    value_perm: Vec<u32>,
}

impl SymmetryElement {
    /// `index_perm[i]` is 0-based; `value_perm[v - 1]` is the image of symbol `v`.
    pub fn new(index_perm: Vec<usize>, value_perm: Vec<u32>) -> Result<Self> {
        let n = index_perm.len();
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in index_perm.iter().enumerate() {
            if p >= n || inv[p] != usize::MAX {
                return Err(Error::input("index permutation is not a bijection"));
            }
            inv[p] = i;
        }
        let m = value_perm.len();
        let mut seen = vec![false; m];
        for &v in &value_perm {
            if v == 0 || v as usize > m || seen[v as usize - 1] {
                return Err(Error::input("value permutation is not a bijection"));
            }
            seen[v as usize - 1] = true;
        }
        Ok(SymmetryElement {
            index_perm,
            index_inv: inv,
            value_perm,
        })
    }

    pub fn identity(n: usize, m: u32) -> Self {
        SymmetryElement {
            index_perm: (0..n).collect(),
            index_inv: (0..n).collect(),
            value_perm: (1..=m).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, m: u32, rng: &mut R) -> Self {
        let mut ip: Vec<usize> = (0..n).collect();
        ip.shuffle(rng);
        let mut vp: Vec<u32> = (1..=m).collect();
        vp.shuffle(rng);
        SymmetryElement::new(ip, vp).expect("shuffles are bijections")
    }

    pub fn n(&self) -> usize {
        self.index_perm.len()
    }

    pub fn m(&self) -> u32 {
        self.value_perm.len() as u32
    }

    pub fn index_perm(&self) -> &[usize] {
        &self.index_perm
    }

    pub fn value_perm(&self) -> &[u32] {
        &self.value_perm
    }

    pub fn map_value(&self, v: u32) -> u32 {
        self.value_perm[v as usize - 1]
    }

    /// Position in `sigma x` that carries (the image of) `x_j`.
    pub fn map_index(&self, j: usize) -> usize {
        self.index_inv[j]
    }

    pub fn map_subset(&self, s: Subset) -> Subset {
        Subset::from_indices(s.iter().map(|j| self.map_index(j)))
    }

    pub fn map_assignment(&self, a: &Assignment) -> Assignment {
        let mut pairs: Vec<(usize, u32)> = a
            .iter()
            .map(|(i, v)| (self.map_index(i), self.map_value(v)))
            .collect();
        pairs.sort_unstable();
        Assignment {
            domain: Subset::from_indices(pairs.iter().map(|p| p.0)),
            values: pairs.into_iter().map(|p| p.1).collect(),
        }
    }

    fn check_dims(&self, x: &InputPoint) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::input(format!(
                "symmetry acts on n={}, input has length {}",
                self.n(),
                x.len()
            )));
        }
        if x.max_symbol() > self.m() {
            return Err(Error::input(format!("symmetry acts on m={}, input {x} exceeds it", self.m())));
        }
        Ok(())
    }

    pub fn apply(&self, x: &InputPoint) -> Result<InputPoint> {
        self.check_dims(x)?;
        Ok(InputPoint(
            self.index_perm
                .iter()
                .map(|&src| self.map_value(x.get(src)))
                .collect(),
        ))
    }

    pub fn inverse(&self) -> Self {
        let mut vinv = vec![0u32; self.value_perm.len()];
        for (v, &img) in self.value_perm.iter().enumerate() {
            vinv[img as usize - 1] = v as u32 + 1;
        }
        SymmetryElement {
            index_perm: self.index_inv.clone(),
            index_inv: self.index_perm.clone(),
            value_perm: vinv,
        }
    }
}

pub fn apply_symmetry(sigma: &SymmetryElement, x: &InputPoint) -> Result<InputPoint> {
    sigma.apply(x)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Every element of `S_n x S_m`, refusing when `n! m!` exceeds `cap`.
pub fn full_group(n: usize, m: u32, cap: u64) -> Result<Vec<SymmetryElement>> {
    let fact = |k: u64| (1..=k).try_fold(1u64, |a, b| a.checked_mul(b));
    let order = fact(n as u64).and_then(|a| fact(m as u64).and_then(|b| a.checked_mul(b)));
    match order {
        Some(o) if o <= cap => {}
        _ => {
            return Err(Error::Resource(format!(
                "|S_{n} x S_{m}| exceeds the group cap {cap}"
            )))
        }
    }
    let vperms = permutations(m as usize);
    let mut out = Vec::new();
    for ip in permutations(n) {
        for vp in &vperms {
            let vp: Vec<u32> = vp.iter().map(|&v| v as u32 + 1).collect();
            out.push(SymmetryElement::new(ip.clone(), vp).expect("permutation"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> InputPoint {
        s.parse().unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let ed = FunctionSpec::k_distinctness(2, 3, 2).unwrap();
        assert!(ed.evaluate(&x("1,2,1")).unwrap());
        let k3 = FunctionSpec::k_distinctness(3, 3, 2).unwrap();
        assert!(!k3.evaluate(&x("1,1,2")).unwrap());
        let k3 = FunctionSpec::k_distinctness(3, 4, 9).unwrap();
        assert!(k3.evaluate(&x("4,4,4,9")).unwrap());
        assert!(matches!(k3.evaluate(&x("1,1,1")), Err(Error::Input(_))));
        assert!(matches!(k3.evaluate(&x("1,1,1,10")), Err(Error::Input(_))));
    }

    #[test]
    fn accepting_examples() {
        let ed = FunctionSpec::k_distinctness(2, 3, 2).unwrap();
        let p = x("1,2,1");
        assert!(ed.is_accepting(&p, Subset::from_indices([0, 2])).unwrap());
        assert!(!ed.is_accepting(&p, Subset::from_indices([0, 1])).unwrap());
        let k3 = FunctionSpec::k_distinctness(3, 4, 7).unwrap();
        assert!(k3.is_accepting(&x("5,5,5,7"), Subset::from_indices([0, 1, 2])).unwrap());
    }

    #[test]
    fn table_acceptance_uses_completions() {
        // OR of "x_i = 2" on n=2, m=2
        let or = FunctionSpec::from_predicate(2, 2, |x| x.values().contains(&2)).unwrap();
        assert_eq!(or.to_string(), "table:n=2,m=2,bits=0111");
        let p = x("2,1");
        assert!(or.is_accepting(&p, Subset::from_indices([0])).unwrap());
        assert!(!or.is_accepting(&p, Subset::from_indices([1])).unwrap());
        assert!(!or.is_accepting(&p, Subset::EMPTY).unwrap());
        assert!(or.is_accepting(&p, Subset::full(2)).unwrap());
    }

    #[test]
    fn symmetry_examples() {
        let id = SymmetryElement::identity(3, 3);
        assert_eq!(id.apply(&x("1,2,1")).unwrap(), x("1,2,1"));
        let swap = SymmetryElement::new(vec![1, 0, 2], vec![1, 2, 3]).unwrap();
        assert_eq!(swap.apply(&x("1,2,1")).unwrap(), x("2,1,1"));
        let relabel = SymmetryElement::new(vec![0, 1, 2], vec![3, 2, 1]).unwrap();
        assert_eq!(relabel.apply(&x("1,2,1")).unwrap(), x("3,2,3"));
        assert!(SymmetryElement::new(vec![0, 0], vec![1]).is_err());
        assert!(swap.apply(&x("1,2")).is_err());
    }

    #[test]
    fn map_index_tracks_values() {
        let mut rng = rand::rng();
        for _ in 0..50 {
            let s = SymmetryElement::random(5, 4, &mut rng);
            let p = x("1,2,3,4,2");
            let q = s.apply(&p).unwrap();
            for j in 0..5 {
                assert_eq!(q.get(s.map_index(j)), s.map_value(p.get(j)));
            }
            let a = Assignment::of(&p, Subset::from_indices([1, 3]));
            let b = s.map_assignment(&a);
            assert_eq!(b, Assignment::of(&q, s.map_subset(a.domain())));
            assert_eq!(s.inverse().apply(&q).unwrap(), p);
        }
    }

    #[test]
    fn enumeration_examples() {
        let f = FunctionSpec::k_distinctness(2, 2, 2).unwrap();
        let pos: Vec<_> = enumerate_inputs(&f, InputClass::Positive, 100).unwrap().collect();
        assert_eq!(pos, vec![x("1,1"), x("2,2")]);
        let neg: Vec<_> = enumerate_inputs(&f, InputClass::Negative, 100).unwrap().collect();
        assert_eq!(neg, vec![x("1,2"), x("2,1")]);
        let f3 = FunctionSpec::k_distinctness(3, 2, 2).unwrap();
        assert_eq!(enumerate_inputs(&f3, InputClass::Positive, 100).unwrap().count(), 0);
        assert!(matches!(
            enumerate_inputs(&f, InputClass::All, 3).err(),
            Some(Error::Resource(_))
        ));
        assert!(FunctionSpec::k_distinctness(1, 2, 2).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["kdist:k=3,n=6,m=6", "table:n=1,m=2,bits=01"] {
            let f: FunctionSpec = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        let ed: FunctionSpec = "ed:n=4,m=4".parse().unwrap();
        assert_eq!(ed.k(), Some(2));
        for bad in ["kdist:k=3,n=6", "kdist:k=3,n=6,m=6,z=1", "foo:n=1", "table:n=1,m=2,bits=011", "kdist"] {
            assert!(bad.parse::<FunctionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn subset_and_assignment_text() {
        let s: Subset = "1,3".parse().unwrap();
        assert_eq!(s, Subset::from_indices([0, 2]));
        assert_eq!(s.to_string(), "1,3");
        assert_eq!("-".parse::<Subset>().unwrap(), Subset::EMPTY);
        assert!("3,1".parse::<Subset>().is_err());
        let a: Assignment = "1=2,3=1".parse().unwrap();
        assert_eq!(a.get(2), Some(1));
        assert_eq!(a.get(1), None);
        assert_eq!(a.to_string(), "1=2,3=1");
    }

    #[test]
    fn group_enumeration() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(full_group(3, 3, 1000).unwrap().len(), 36);
        assert!(full_group(6, 6, 1000).is_err());
    }
}
