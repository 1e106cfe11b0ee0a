//! Line-oriented text formats.
//!
//! Every format skips blank lines and lines starting with `#`, which is where
//! the provenance header lives. Indices and symbols are 1-based on disk; arc
//! ids count `a` lines from 0.
//!
//! Graph files:
//!
//! ```text
//! lg n=2 depth=1
//! f kdist:k=2,n=2,m=2
//! v -
//! v 1
//! v 2
//! a - 1
//! a - 2
//! w 0 - 1.0
//! w 1 - 1.0
//! x 1,1
//! x 1,2
//! flow x=1,1
//! p 0 0.5
//! p 1 0.5
//! ```
//!
//! `f` and the `x` lines (the input domain) are optional; without `x` lines
//! the whole cube of `f` is meant. Flow values omitted from a `flow` block are
//! zero.
//!
//! Certificate files:
//!
//! ```text
//! certificate f=kdist:k=2,n=2,m=2
//! a - 1
//! x 1,1
//! u 1,1 1 0 1.0
//! ```
//!
//! The `a` lines carry the arc table the pair check needs, and `x` lines list
//! every input so that inputs without stored coordinates are not lost.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use num::{BigInt, BigRational, BigUint, ToPrimitive, Zero};

use crate::certificate::{CertificateBundle, InputVectors, PairRow};
use crate::domain::{Assignment, Domain, FunctionSpec, InputPoint, Subset};
use crate::error::{Error, Result};
use crate::exact::Surd;
use crate::flow::Flow;
use crate::graph::{GraphBuilder, LearningGraph};
use crate::weights::WeightTable;

/// Numbers as they appear in files.
pub trait TextValue: Sized {
    fn to_text(&self) -> String;
    fn from_text(s: &str) -> Option<Self>;
}

/// Shortest round-trip decimal; `a/b` and surds are also read.
impl TextValue for f64 {
    fn to_text(&self) -> String {
        format!("{self:?}")
    }

    fn from_text(s: &str) -> Option<Self> {
        s.parse::<f64>()
            .ok()
            .or_else(|| Surd::from_text(s).map(|q| q.to_f64()))
    }
}

/// `a/b`; decimals are read as the exact value of the nearest double.
impl TextValue for BigRational {
    fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_text(s: &str) -> Option<Self> {
        if let Ok(q) = BigRational::from_str(s) {
            return Some(q);
        }
        s.parse::<f64>().ok().and_then(BigRational::from_float)
    }
}

/// `q` or `q*sqrt(r)`.
impl TextValue for Surd {
    fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_text(s: &str) -> Option<Self> {
        match s.split_once("*sqrt(") {
            Some((q, rest)) => {
                let r = rest.strip_suffix(')')?;
                let q = BigRational::from_text(q)?;
                let r = BigUint::from_str(r).ok()?;
                Some(Surd::sqrt(&BigRational::from_integer(BigInt::from(r)))?.scale(&q))
            }
            None => BigRational::from_text(s).map(Surd::rational),
        }
    }
}

/// Tool version, resolved configuration and seed, written as `#` lines at
/// the top of every artifact.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config: Vec<(String, String)>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {}", self.tool);
        let _ = writeln!(s, "# command: {}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(s, "# config: {k}={v}");
        }
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed: {seed}");
            }
            None => s.push_str("# seed: none\n"),
        }
        s
    }

    /// Reads back the header written by [`Self::header`] from the leading
    /// `#` lines of `text`.
    pub fn parse(text: &str) -> Option<Self> {
        let mut p = Provenance::default();
        let mut seen = false;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix("# ") else { break };
            if let Some(t) = rest.strip_prefix("tool: ") {
                p.tool = t.to_string();
                seen = true;
            } else if let Some(c) = rest.strip_prefix("command: ") {
                p.command = c.to_string();
            } else if let Some(kv) = rest.strip_prefix("config: ") {
                let (k, v) = kv.split_once('=')?;
                p.config.push((k.to_string(), v.to_string()));
            } else if let Some(s) = rest.strip_prefix("seed: ") {
                p.seed = s.parse().ok();
            }
        }
        seen.then_some(p)
    }
}

/// `key=value` tokens separated by whitespace, as in parameter files
/// (`k=3 n=100 l=30,20`) and on the command line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (no, line) in numbered(text) {
            for tok in line.split_whitespace() {
                kv.insert_token(tok).map_err(|e| Error::parse(no, e.to_string()))?;
            }
        }
        Ok(kv)
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut kv = KeyValues::default();
        for tok in tokens {
            kv.insert_token(tok)?;
        }
        Ok(kv)
    }

    fn insert_token(&mut self, tok: &str) -> Result<()> {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::input(format!("expected key=value, got {tok:?}")))?;
        if k.is_empty() || v.is_empty() {
            return Err(Error::input(format!("empty key or value in {tok:?}")));
        }
        if self.entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::input(format!("key {k:?} given twice")));
        }
        Ok(())
    }

    /// Values from `other` override ours.
    pub fn merged(mut self, other: KeyValues) -> Self {
        self.entries.extend(other.entries);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::input(format!(
                "unknown option {k:?}; expected one of {}",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    pub fn number<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::input(format!("bad value {v:?} for {key}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.number(key)?
            .ok_or_else(|| Error::input(format!("missing required option {key}=")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<T>()
                            .map_err(|_| Error::input(format!("bad entry {t:?} in {key}={v}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// A graph with its weights, optional function and domain, and flows.
#[derive(Clone, Debug)]
pub struct GraphDocument<T = f64> {
    pub graph: LearningGraph,
    pub function: Option<FunctionSpec>,
    pub weights: WeightTable<f64>,
    /// Explicit input domain; empty means the whole cube of `function`.
    pub inputs: Vec<InputPoint>,
    pub flows: Vec<Flow<T>>,
}

impl<T> GraphDocument<T> {
    /// The explicit domain, or the cube of the function when no inputs are
    /// listed.
    pub fn domain(&self, cap: u64) -> Result<Domain> {
        let f = self
            .function
            .as_ref()
            .ok_or_else(|| Error::input("the graph file names no function (missing `f` line)"))?;
        if self.inputs.is_empty() {
            Domain::cube(f, cap)
        } else {
            Domain::explicit(f, self.inputs.iter().cloned())
        }
    }
}

impl<T: TextValue + Zero> GraphDocument<T> {
    pub fn write<Wr: Write>(&self, mut out: Wr) -> Result<()> {
        let g = &self.graph;
        writeln!(out, "lg n={} depth={}", g.n(), g.depth())?;
        if let Some(f) = &self.function {
            writeln!(out, "f {f}")?;
        }
        for s in g.vertices() {
            writeln!(out, "v {s}")?;
        }
        for a in g.arcs() {
            writeln!(out, "a {} {}", g.vertex(a.origin), a.loaded + 1)?;
        }
        for (e, vals, w) in self.weights.sorted_entries() {
            let alpha = Assignment::new(g.arc_view(e).origin, vals.to_vec())?;
            writeln!(out, "w {e} {alpha} {}", w.to_text())?;
        }
        for x in &self.inputs {
            writeln!(out, "x {x}")?;
        }
        for p in &self.flows {
            writeln!(out, "flow x={}", p.input)?;
            for (e, v) in p.values.iter().enumerate() {
                if !v.is_zero() {
                    writeln!(out, "p {e} {}", v.to_text())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("formats are ASCII"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = numbered(text);
        let (no, head) = lines.next().ok_or_else(|| Error::parse(0, "empty graph file"))?;
        let (n, depth) = parse_header(no, head)?;
        let mut builder = GraphBuilder::new(n).map_err(|e| Error::parse(no, e.to_string()))?;
        let mut function = None;
        let mut arcs: Vec<Subset> = Vec::new();
        let mut weight_rows: Vec<(usize, usize, Assignment, f64)> = Vec::new();
        let mut inputs = Vec::new();
        let mut flow_rows: Vec<(usize, InputPoint, Vec<(usize, usize, T)>)> = Vec::new();
        let mut stage = 0u8;
        for (no, line) in lines {
            let (tag, rest) = split_tag(line);
            let order = match tag {
                "f" => 0,
                "v" => 1,
                "a" => 2,
                "w" => 3,
                "x" => 4,
                "flow" | "p" => 5,
                other => return Err(Error::parse(no, format!("unknown record {other:?}"))),
            };
            if order < stage {
                return Err(Error::parse(no, format!("`{tag}` record out of order")));
            }
            stage = order;
            let at = |e: Error| Error::parse(no, e.to_string());
            match tag {
                "f" => {
                    if function.is_some() {
                        return Err(Error::parse(no, "second `f` line"));
                    }
                    function = Some(FunctionSpec::from_str(rest).map_err(at)?);
                }
                "v" => builder.add_vertex(Subset::from_str(rest).map_err(at)?).map_err(at)?,
                "a" => {
                    let [origin, j] = fields::<2>(no, rest)?;
                    let origin = Subset::from_str(origin).map_err(at)?;
                    let j = parse_index(no, j, n)?;
                    builder.add_arc(origin, j).map_err(at)?;
                    arcs.push(origin);
                }
                "w" => {
                    let [e, alpha, v] = fields::<3>(no, rest)?;
                    let e = parse_arc(no, e, arcs.len())?;
                    let alpha = Assignment::from_str(alpha).map_err(at)?;
                    if alpha.domain() != arcs[e] {
                        return Err(Error::parse(
                            no,
                            format!("assignment {alpha} does not match the origin {} of arc {e}", arcs[e]),
                        ));
                    }
                    let v = f64::from_text(v).ok_or_else(|| Error::parse(no, format!("bad weight {v:?}")))?;
                    weight_rows.push((no, e, alpha, v));
                }
                "x" => inputs.push(parse_input(no, rest, n)?),
                "flow" => {
                    let x = rest
                        .strip_prefix("x=")
                        .ok_or_else(|| Error::parse(no, "expected `flow x=<input>`"))?;
                    flow_rows.push((no, parse_input(no, x, n)?, Vec::new()));
                }
                _ => {
                    let [e, v] = fields::<2>(no, rest)?;
                    let e = parse_arc(no, e, arcs.len())?;
                    let v = T::from_text(v).ok_or_else(|| Error::parse(no, format!("bad flow value {v:?}")))?;
                    flow_rows
                        .last_mut()
                        .ok_or_else(|| Error::parse(no, "`p` line before any `flow` header"))?
                        .2
                        .push((no, e, v));
                }
            }
        }
        let graph = builder.build().map_err(|e| Error::parse(no, e.to_string()))?;
        if graph.depth() != depth {
            return Err(Error::parse(
                no,
                format!("header says depth {depth} but the vertices reach depth {}", graph.depth()),
            ));
        }
        if let Some(f) = &function {
            if f.n() != n {
                return Err(Error::parse(no, format!("function has n = {} but the graph has n = {n}", f.n())));
            }
        }
        let mut weights = WeightTable::new();
        let mut seen = HashSet::new();
        for (no, e, alpha, v) in weight_rows {
            if !seen.insert((e, alpha.values().to_vec())) {
                return Err(Error::parse(no, format!("second weight for arc {e} on {alpha}")));
            }
            weights.insert(e, &alpha, v);
        }
        let mut flows = Vec::new();
        let mut seen_inputs = HashSet::new();
        for (no, x, rows) in flow_rows {
            if !seen_inputs.insert(x.clone()) {
                return Err(Error::parse(no, format!("second flow for input {x}")));
            }
            let mut values: Vec<Option<T>> = (0..graph.num_arcs()).map(|_| None).collect();
            for (no, e, v) in rows {
                if values[e].replace(v).is_some() {
                    return Err(Error::parse(no, format!("arc {e} appears twice in this flow")));
                }
            }
            flows.push(Flow {
                input: x,
                values: values.into_iter().map(|v| v.unwrap_or_else(T::zero)).collect(),
            });
        }
        Ok(GraphDocument {
            graph,
            function,
            weights,
            inputs,
            flows,
        })
    }
}

fn parse_header(no: usize, head: &str) -> Result<(usize, usize)> {
    let kv = head
        .strip_prefix("lg ")
        .ok_or_else(|| Error::parse(no, "graph files start with `lg n=<n> depth=<d>`"))?;
    let kv = KeyValues::from_tokens(kv.split_whitespace()).map_err(|e| Error::parse(no, e.to_string()))?;
    kv.reject_unknown(&["n", "depth"]).map_err(|e| Error::parse(no, e.to_string()))?;
    let n: usize = kv.require("n").map_err(|e| Error::parse(no, e.to_string()))?;
    let depth: usize = kv.require("depth").map_err(|e| Error::parse(no, e.to_string()))?;
    Ok((n, depth))
}

/// Writes a certificate with coordinates rendered by [`TextValue`].
pub fn write_certificate<C: TextValue + Clone, Wr: Write>(bundle: &CertificateBundle<C>, mut out: Wr) -> Result<()> {
    writeln!(out, "certificate f={}", bundle.spec)?;
    for e in 0..bundle.num_arcs() {
        let (origin, loaded) = bundle.arc(e);
        writeln!(out, "a {origin} {}", loaded + 1)?;
    }
    for v in &bundle.inputs {
        writeln!(out, "x {}", v.input)?;
    }
    for v in &bundle.inputs {
        for (e, c) in &v.coords {
            writeln!(out, "u {} {} {e} {}", v.input, bundle.arc(*e).1 + 1, c.to_text())?;
        }
    }
    Ok(())
}

pub fn parse_certificate<C: TextValue + Clone>(text: &str) -> Result<CertificateBundle<C>> {
    let mut lines = numbered(text);
    let (no, head) = lines.next().ok_or_else(|| Error::parse(0, "empty certificate file"))?;
    let spec = head
        .strip_prefix("certificate f=")
        .ok_or_else(|| Error::parse(no, "certificate files start with `certificate f=<spec>`"))?;
    let spec = FunctionSpec::from_str(spec).map_err(|e| Error::parse(no, e.to_string()))?;
    let n = spec.n();
    let mut arcs = Vec::new();
    let mut inputs: Vec<InputVectors<C>> = Vec::new();
    let mut position = std::collections::HashMap::new();
    let mut stage = 0u8;
    for (no, line) in lines {
        let (tag, rest) = split_tag(line);
        let order = match tag {
            "a" => 0,
            "x" => 1,
            "u" => 2,
            other => return Err(Error::parse(no, format!("unknown record {other:?}"))),
        };
        if order < stage {
            return Err(Error::parse(no, format!("`{tag}` record out of order")));
        }
        stage = order;
        match tag {
            "a" => {
                let [origin, j] = fields::<2>(no, rest)?;
                let origin = Subset::from_str(origin).map_err(|e| Error::parse(no, e.to_string()))?;
                arcs.push((origin, parse_index(no, j, n)?));
            }
            "x" => {
                let x = parse_input(no, rest, n)?;
                let positive = spec.evaluate(&x).map_err(|e| Error::parse(no, e.to_string()))?;
                if position.insert(x.clone(), inputs.len()).is_some() {
                    return Err(Error::parse(no, format!("input {x} listed twice")));
                }
                inputs.push(InputVectors {
                    input: x,
                    positive,
                    coords: Vec::new(),
                });
            }
            _ => {
                let [x, j, e, v] = fields::<4>(no, rest)?;
                let x = parse_input(no, x, n)?;
                let j = parse_index(no, j, n)?;
                let e = parse_arc(no, e, arcs.len())?;
                if arcs[e].1 != j {
                    return Err(Error::parse(no, format!("arc {e} loads {}, not {}", arcs[e].1 + 1, j + 1)));
                }
                let v = C::from_text(v).ok_or_else(|| Error::parse(no, format!("bad coordinate {v:?}")))?;
                let i = *position
                    .get(&x)
                    .ok_or_else(|| Error::parse(no, format!("input {x} has no `x` line")))?;
                inputs[i].coords.push((e, v));
            }
        }
    }
    CertificateBundle::from_parts(spec, arcs, inputs).map_err(|e| Error::parse(0, e.to_string()))
}

/// Pairwise verification rows as CSV `x,y,sum,deviation`, inputs written
/// with `;` between symbols.
pub fn write_pair_csv<Wr: Write>(rows: &[PairRow], out: Wr) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "sum", "deviation"])?;
    for r in rows {
        w.write_record([
            r.x.to_string().replace(',', ";"),
            r.y.to_string().replace(',', ";"),
            r.sum.to_text(),
            r.deviation.to_text(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the CSV written by [`write_pair_csv`], skipping `#` lines.
pub fn read_pair_csv(text: &str) -> Result<Vec<PairRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let no = i + 2;
        if rec.len() != 4 {
            return Err(Error::parse(no, "expected 4 columns"));
        }
        let input = |s: &str| InputPoint::from_str(&s.replace(';', ",")).map_err(|e| Error::parse(no, e.to_string()));
        let num = |s: &str| f64::from_text(s).ok_or_else(|| Error::parse(no, format!("bad number {s:?}")));
        rows.push(PairRow {
            x: input(&rec[0])?,
            y: input(&rec[1])?,
            sum: num(&rec[2])?,
            deviation: num(&rec[3])?,
        });
    }
    Ok(rows)
}

/// Non-comment lines with 1-based line numbers, trimmed.
fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn split_tag(line: &str) -> (&str, &str) {
    match line.split_once(char::is_whitespace) {
        Some((t, r)) => (t, r.trim()),
        None => (line, ""),
    }
}

fn fields<const K: usize>(no: usize, rest: &str) -> Result<[&str; K]> {
    let v: Vec<&str> = rest.split_whitespace().collect();
    v.try_into()
        .map_err(|v: Vec<&str>| Error::parse(no, format!("expected {K} fields, found {}", v.len())))
}

/// 1-based index in `1..=n`, returned 0-based.
fn parse_index(no: usize, s: &str, n: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(j) if (1..=n).contains(&j) => Ok(j - 1),
        _ => Err(Error::parse(no, format!("index {s:?} outside 1..={n}"))),
    }
}

fn parse_arc(no: usize, s: &str, arcs: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(e) if e < arcs => Ok(e),
        _ => Err(Error::parse(no, format!("arc id {s:?} is not one of the {arcs} declared arcs"))),
    }
}

fn parse_input(no: usize, s: &str, n: usize) -> Result<InputPoint> {
    let x = InputPoint::from_str(s).map_err(|e| Error::parse(no, e.to_string()))?;
    if x.len() != n {
        return Err(Error::parse(no, format!("input {x} has length {}, expected {n}", x.len())));
    }
    Ok(x)
}

/// Lossy float view of a rational, for reports.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
