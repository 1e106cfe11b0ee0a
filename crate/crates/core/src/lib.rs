//! Learning graphs and the dual adversary bound.
//!
//! The crate is organised around the objects a learning-graph upper bound is
//! made of:
//!
//! * [`domain`]: inputs, the k-distinctness family, certificates and the
//!   index/value symmetry group acting on inputs.
//! * [`graph`], [`weights`], [`flow`], [`complexity`]: the layered subset
//!   graph, locality-respecting weight functions, unit flows and their
//!   quadratic cost, and the positive/negative complexity of a graph.
//! * [`certificate`]: compilation of a weighted graph plus flows into a
//!   feasible solution of the dual adversary program, and its pairwise
//!   verification.
//! * [`symmetry`]: specifications, type matrices, group averaging, flow
//!   transport and class-based weighting.
//! * [`kdist`]: the two k-distinctness constructions (the uniform baseline
//!   and the staged subtuple-enriching graph) with their combinatorics.
//! * [`concentration`]: Monte Carlo checks of the concentration statements
//!   the staged construction relies on.
//! * [`formats`]: line-oriented text formats for graphs, flows, certificates
//!   and parameter files.

pub mod certificate;
pub mod combinatorics;
pub mod complexity;
pub mod concentration;
pub mod domain;
pub mod error;
pub mod exact;
pub mod flow;
pub mod formats;
pub mod graph;
pub mod kdist;
pub mod scalar;
pub mod symmetry;
pub mod weights;

pub use error::{Error, Result};
