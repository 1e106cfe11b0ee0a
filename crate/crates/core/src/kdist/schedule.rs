//! Step schedule of the staged construction and the specifications each
//! step admits.

use std::fmt;

use num::{BigInt, BigRational};

use super::counting::{expected_subtuples, specs_of_size};
use super::{Promise, StageParams};
use crate::error::{Error, Result};
use crate::symmetry::Specification;

/// Name of a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepLabel {
    /// Step `j` of the unrestricted first stage, `1 <= j <= r_1`.
    FirstStage(usize),
    /// Round `j` of stage `i`, loading the element of level `l`.
    Prep { i: usize, j: usize, l: usize },
    /// Step `j` of the last stage, `1 <= j <= k`, loading marked elements.
    LastStage(usize),
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::FirstStage(j) => write!(f, "first({j})"),
            StepLabel::Prep { i, j, l } => write!(f, "prep({i},{j},{l})"),
            StepLabel::LastStage(j) => write!(f, "last({j})"),
        }
    }
}

/// `cap_t = 2 (k-2) E[b_t]` for `t = 2..k-1`, with `E[b_t]` over uniform
/// `r_1`-subsets of the tuple blocks. By Markov and a union bound at most
/// half of those subsets exceed some cap.
pub fn dead_end_caps(promise: &Promise, r1: usize) -> Result<Vec<BigRational>> {
    let k = promise.k;
    (2..k)
        .map(|t| Ok(expected_subtuples(promise, r1, t)? * BigInt::from(2 * (k - 2))))
        .collect()
}

/// `b'_l = b_l + 1`, `b'_{l-1} = b_{l-1} - 1`: the effect of loading an
/// element that joins an `(l-1)`-subtuple.
pub fn transition(spec: &Specification, l: usize) -> Result<Specification> {
    let k = spec.k();
    if l == 0 || l >= k {
        return Err(Error::input(format!("level {l} outside 1..{}", k - 1)));
    }
    let mut b = spec.0.clone();
    if l >= 2 {
        if b[l - 2] == 0 {
            return Err(Error::input(format!("{spec} has no {}-subtuple to extend", l - 1)));
        }
        b[l - 2] -= 1;
    }
    b[l - 1] += 1;
    Ok(Specification(b))
}

/// The ordered steps for given stage sizes, plus the dead-end caps.
#[derive(Clone, Debug)]
pub struct Schedule {
    params: StageParams,
    labels: Vec<StepLabel>,
    caps: Option<Vec<BigRational>>,
}

impl Schedule {
    /// Schedule with dead-end caps derived from the promise.
    pub fn new(params: StageParams, promise: &Promise) -> Result<Self> {
        if promise.k != params.k {
            return Err(Error::input("promise and stage parameters disagree on k"));
        }
        if params.r(1) > promise.n_prime() {
            return Err(Error::input(format!(
                "r_1 = {} exceeds the {} tuple indices",
                params.r(1),
                promise.n_prime()
            )));
        }
        let caps = dead_end_caps(promise, params.r(1))?;
        Ok(Schedule {
            labels: Self::labels(&params),
            params,
            caps: Some(caps),
        })
    }

    /// Schedule in which every original specification is admitted.
    pub fn uncapped(params: StageParams) -> Self {
        Schedule {
            labels: Self::labels(&params),
            params,
            caps: None,
        }
    }

    fn labels(p: &StageParams) -> Vec<StepLabel> {
        let k = p.k;
        let mut out: Vec<StepLabel> = (1..=p.r(1)).map(StepLabel::FirstStage).collect();
        for i in 2..k {
            for j in 1..=p.r(i) {
                // the final round of stage k-1 opens the last stage
                if i == k - 1 && j == p.r(i) {
                    continue;
                }
                out.extend((1..=i).map(|l| StepLabel::Prep { i, j, l }));
            }
        }
        out.extend((1..=k).map(StepLabel::LastStage));
        out
    }

    pub fn params(&self) -> &StageParams {
        &self.params
    }

    pub fn caps(&self) -> Option<&[BigRational]> {
        self.caps.as_deref()
    }

    /// `c_t = cap_t n^{t-1} / r_1^t` for `t = 2..k-1`.
    pub fn dead_end_constants(&self) -> Option<Vec<BigRational>> {
        let (n, r1) = (BigInt::from(self.params.n), BigInt::from(self.params.r(1)));
        self.caps.as_ref().map(|caps| {
            caps.iter()
                .enumerate()
                .map(|(i, c)| {
                    let t = i as u32 + 2;
                    c * BigRational::new(n.pow(t - 1), r1.pow(t))
                })
                .collect()
        })
    }

    pub fn depth(&self) -> usize {
        self.labels.len()
    }

    pub fn labels_in_order(&self) -> &[StepLabel] {
        &self.labels
    }

    /// Label of step `h`, 1-based; step `h` leaves layer `h - 1`.
    pub fn label(&self, h: usize) -> Option<StepLabel> {
        h.checked_sub(1).and_then(|i| self.labels.get(i)).copied()
    }

    /// Step number of a label.
    pub fn step_of(&self, label: StepLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label).map(|i| i + 1)
    }

    /// Speciality of a step: `1` in the first stage, `n / r_{l-1}` for a
    /// preparation step of level `l`, `n^2 / r_{j-1}` for last-stage step `j`.
    pub fn speciality(&self, label: StepLabel) -> f64 {
        let n = self.params.n as f64;
        match label {
            StepLabel::FirstStage(_) => 1.0,
            StepLabel::Prep { l, .. } => n / self.params.r(l - 1) as f64,
            StepLabel::LastStage(j) => n * n / self.params.r(j - 1) as f64,
        }
    }

    fn base_offset(&self, label: StepLabel) -> Option<Vec<usize>> {
        let k = self.params.k;
        let mut b = vec![0usize; k - 1];
        let (stage, rounds) = match label {
            StepLabel::FirstStage(_) => return None,
            StepLabel::Prep { i, j, .. } => (i, j - 1),
            StepLabel::LastStage(_) if k == 2 => return Some(b),
            StepLabel::LastStage(_) => (k - 1, self.params.r(k - 1) - 1),
        };
        for t in 2..stage {
            b[t - 1] += self.params.r(t);
        }
        b[stage - 1] += rounds;
        Some(b)
    }

    /// What step `h` adds to an original specification, measured at the
    /// origin of its arcs. `None` for first-stage steps.
    pub fn origin_offset(&self, h: usize) -> Option<Vec<usize>> {
        let label = self.label(h)?;
        let mut b = self.base_offset(label)?;
        let level = match label {
            StepLabel::Prep { l, .. } => l,
            StepLabel::LastStage(j) => j,
            StepLabel::FirstStage(_) => unreachable!(),
        };
        if level >= 2 {
            b[level - 2] += 1;
        }
        Some(b)
    }

    /// Whether `spec` may leave the first stage: size `r_1` and within every cap.
    pub fn is_valid_original(&self, spec: &Specification) -> bool {
        if spec.k() != self.params.k || spec.size() != self.params.r(1) {
            return false;
        }
        match &self.caps {
            None => true,
            Some(caps) => caps
                .iter()
                .enumerate()
                .all(|(i, cap)| BigRational::from_integer(BigInt::from(spec.get(i + 2))) <= *cap),
        }
    }

    /// Whether arcs of step `h` leave vertices with specification `spec`.
    pub fn is_valid_origin(&self, h: usize, spec: &Specification) -> bool {
        let Some(label) = self.label(h) else {
            return false;
        };
        if spec.k() != self.params.k || spec.size() != h - 1 {
            return false;
        }
        if let StepLabel::FirstStage(_) = label {
            return true;
        }
        self.original_of_origin(h, spec)
            .is_some_and(|orig| self.is_valid_original(&orig))
    }

    /// Subtracts the step offset from an origin specification.
    pub fn original_of_origin(&self, h: usize, spec: &Specification) -> Option<Specification> {
        let off = self.origin_offset(h)?;
        let b = spec
            .0
            .iter()
            .zip(&off)
            .map(|(b, o)| b.checked_sub(*o))
            .collect::<Option<Vec<_>>>()?;
        Some(Specification(b))
    }

    /// Every specification admitted at the origin of step `h`.
    pub fn valid_specs_for_step(&self, h: usize) -> Result<Vec<Specification>> {
        let label = self
            .label(h)
            .ok_or_else(|| Error::input(format!("step {h} outside 1..{}", self.depth())))?;
        let k = self.params.k;
        if let StepLabel::FirstStage(j) = label {
            return Ok(specs_of_size(k, j - 1));
        }
        let off = self.origin_offset(h).unwrap();
        Ok(specs_of_size(k, self.params.r(1))
            .into_iter()
            .filter(|s| self.is_valid_original(s))
            .map(|s| Specification(s.0.iter().zip(&off).map(|(a, b)| a + b).collect()))
            .collect())
    }
}

/// Recovers the specification a vertex had when leaving the first stage
/// from its specification after step `h`. `None` for first-stage steps, the
/// final step, or when the specification cannot arise at this step.
pub fn original_spec(schedule: &Schedule, h: usize, after: &Specification) -> Option<Specification> {
    let label = schedule.label(h)?;
    let level = match label {
        StepLabel::FirstStage(_) => return None,
        StepLabel::Prep { l, .. } => l,
        StepLabel::LastStage(j) if j == schedule.params.k => return None,
        StepLabel::LastStage(j) => j,
    };
    let mut off = schedule.base_offset(label)?;
    off[level - 1] += 1;
    let b = after
        .0
        .iter()
        .zip(&off)
        .map(|(b, o)| b.checked_sub(*o))
        .collect::<Option<Vec<_>>>()?;
    Some(Specification(b))
}
