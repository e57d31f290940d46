//! Exact decoding over a layer's label chain.
//!
//! The lattice has six states per position: the link chosen there and a
//! control bit recording whether any earlier-or-current link differs from
//! `NONE`. Hard constraints, independent of the scores:
//!
//! * the first label is never `LEFT`, the last never `RIGHT`;
//! * `RIGHT` is never followed by `LEFT` (two tokens heading each other);
//! * at least one label differs from `NONE` (the control bit must be set at
//!   the end).
//!
//! Among equally scored sequences the lexicographically smallest one under
//! `LEFT < RIGHT < NONE` wins.

use thiserror::Error;

use crate::model::{FeatureView, Model, PrevLink};
use crate::oracle::{check_labels, Link};
use crate::scalar::{log_add, log_sum_exp, Scalar};

/// Largest length [`brute_force`] accepts.
pub const BRUTE_FORCE_MAX_LEN: usize = 8;

/// Log-score of choosing `cur` at position `t` after `prev`.
pub trait SliceScorer<F: Scalar> {
    fn len(&self) -> usize;

    fn score(&self, t: usize, prev: PrevLink, cur: Link) -> F;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed slice scores, indexed `[t][prev][cur]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<F> {
    slices: Vec<[[F; 3]; 4]>,
}

impl<F: Scalar> Lattice<F> {
    pub fn from_fn(len: usize, mut f: impl FnMut(usize, PrevLink, Link) -> F) -> Self {
        let slices = (0..len)
            .map(|t| {
                let mut s = [[F::neg_infinity(); 3]; 4];
                for prev in PrevLink::ALL {
                    for cur in Link::ALL {
                        s[prev.index()][cur.index()] = f(t, prev, cur);
                    }
                }
                s
            })
            .collect();
        Lattice { slices }
    }

    pub fn from_scorer<S: SliceScorer<F>>(scorer: &S) -> Self {
        Self::from_fn(scorer.len(), |t, p, c| scorer.score(t, p, c))
    }

    pub fn from_model(model: &Model, views: &[FeatureView]) -> Self {
        Self::from_scorer(&ModelScorer::new(model, views))
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: F) -> Self {
        Self::from_fn(self.len(), |t, p, l| self.score(t, p, l) + c)
    }
}

impl<F: Scalar> SliceScorer<F> for Lattice<F> {
    fn len(&self) -> usize {
        self.slices.len()
    }

    fn score(&self, t: usize, prev: PrevLink, cur: Link) -> F {
        self.slices[t][prev.index()][cur.index()]
    }
}

/// Scores slices straight from a model, one [`Model::slice_log_score`] call
/// per query.
#[derive(Clone, Copy, Debug)]
pub struct ModelScorer<'a> {
    model: &'a Model,
    views: &'a [FeatureView],
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a Model, views: &'a [FeatureView]) -> Self {
        ModelScorer { model, views }
    }
}

impl<F: Scalar> SliceScorer<F> for ModelScorer<'_> {
    fn len(&self) -> usize {
        self.views.len()
    }

    fn score(&self, t: usize, prev: PrevLink, cur: Link) -> F {
        self.model.slice_log_score(&self.views[t], prev, cur)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<F> {
    pub labels: Vec<Link>,
    pub log_score: F,
    /// False iff every admissible sequence scores `-inf`.
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Posterior<F> {
    /// Per position, probabilities indexed by [`Link::index`].
    pub marginals: Vec<[F; 3]>,
    pub log_z: F,
}

impl<F: Scalar> Posterior<F> {
    /// Per-position argmax of the marginals. The result may violate the
    /// adjacency and control constraints.
    pub fn decode(&self) -> Vec<Link> {
        self.marginals
            .iter()
            .map(|m| {
                let mut best = 0;
                for i in 1..3 {
                    if m[i] > m[best] {
                        best = i;
                    }
                }
                Link::from_index(best)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("no admissible label sequence has finite score")]
    ZeroMass,
    #[error("brute-force enumeration refused for length {0} (limit {BRUTE_FORCE_MAX_LEN})")]
    TooLong(usize),
}

/// True iff `labels` satisfies every decoding constraint.
pub fn is_admissible(labels: &[Link]) -> bool {
    check_labels(labels).is_ok() && labels.iter().any(|l| l.is_link())
}

/// Left-to-right sum of slice scores of a label sequence.
pub fn sequence_score<F: Scalar, S: SliceScorer<F>>(scorer: &S, labels: &[Link]) -> F {
    let mut prev = PrevLink::Boundary;
    let mut total = F::zero();
    for (t, &l) in labels.iter().enumerate() {
        total = total + scorer.score(t, prev, l);
        prev = PrevLink::Link(l);
    }
    total
}

const STATES: usize = 6;

#[inline]
fn state(link: Link, seen: bool) -> usize {
    link.index() * 2 + seen as usize
}

#[inline]
fn state_link(s: usize) -> Link {
    Link::from_index(s / 2)
}

#[inline]
fn state_seen(s: usize) -> bool {
    s % 2 == 1
}

#[inline]
fn advance(s: usize, cur: Link) -> usize {
    state(cur, state_seen(s) || cur.is_link())
}

/// Labels allowed at position `t` of a length-`len` chain after `prev`.
fn allowed(t: usize, len: usize, prev: Option<Link>, cur: Link) -> bool {
    if t == 0 && cur == Link::Left {
        return false;
    }
    if t + 1 == len && cur == Link::Right {
        return false;
    }
    !(prev == Some(Link::Right) && cur == Link::Left)
}

/// Constrained Viterbi decoding.
///
/// Runs a backward max-product pass and then follows the stored choices
/// forward, so ties resolve to the smallest label at the earliest position.
pub fn viterbi<F: Scalar, S: SliceScorer<F>>(scorer: &S) -> DecodeResult<F> {
    let len = scorer.len();
    if len < 2 {
        return DecodeResult {
            labels: vec![Link::None; len],
            log_score: F::neg_infinity(),
            valid: false,
        };
    }

    // best[t][s]: best completion score from state s at t; None if no
    // admissible completion exists.
    let mut best = vec![[None::<F>; STATES]; len];
    let mut choice = vec![[Link::None; STATES]; len];
    for (s, b) in best[len - 1].iter_mut().enumerate() {
        if state_seen(s) {
            *b = Some(F::zero());
        }
    }
    for t in (0..len - 1).rev() {
        for s in 0..STATES {
            let prev = state_link(s);
            let mut top: Option<(F, Link)> = None;
            for cur in Link::ALL {
                if !allowed(t + 1, len, Some(prev), cur) {
                    continue;
                }
                let Some(rest) = best[t + 1][advance(s, cur)] else {
                    continue;
                };
                let v = scorer.score(t + 1, PrevLink::Link(prev), cur) + rest;
                if top.is_none_or(|(b, _)| v > b) {
                    top = Some((v, cur));
                }
            }
            if let Some((v, cur)) = top {
                best[t][s] = Some(v);
                choice[t][s] = cur;
            }
        }
    }

    let mut start: Option<(F, Link)> = None;
    for cur in Link::ALL {
        if !allowed(0, len, None, cur) {
            continue;
        }
        let Some(rest) = best[0][state(cur, cur.is_link())] else {
            continue;
        };
        let v = scorer.score(0, PrevLink::Boundary, cur) + rest;
        if start.is_none_or(|(b, _)| v > b) {
            start = Some((v, cur));
        }
    }
    let (log_score, first) = start.expect("chains of length >= 2 always admit (RIGHT, .., NONE)");

    let mut labels = Vec::with_capacity(len);
    let mut s = state(first, first.is_link());
    labels.push(first);
    for step in &choice[..len - 1] {
        let cur = step[s];
        labels.push(cur);
        s = advance(s, cur);
    }

    DecodeResult {
        labels,
        log_score,
        valid: log_score > F::neg_infinity(),
    }
}

/// Constrained forward-backward: per-position link marginals and the log
/// partition function over admissible sequences.
pub fn forward_backward<F: Scalar, S: SliceScorer<F>>(
    scorer: &S,
) -> Result<Posterior<F>, InferenceError> {
    let len = scorer.len();
    let ninf = F::neg_infinity();
    if len == 0 {
        return Err(InferenceError::ZeroMass);
    }

    let mut fwd = vec![[ninf; STATES]; len];
    for cur in Link::ALL {
        if allowed(0, len, None, cur) {
            fwd[0][state(cur, cur.is_link())] = scorer.score(0, PrevLink::Boundary, cur);
        }
    }
    for t in 1..len {
        for s in 0..STATES {
            let a = fwd[t - 1][s];
            if a == ninf {
                continue;
            }
            let prev = state_link(s);
            for cur in Link::ALL {
                if allowed(t, len, Some(prev), cur) {
                    let n = advance(s, cur);
                    fwd[t][n] = log_add(fwd[t][n], a + scorer.score(t, PrevLink::Link(prev), cur));
                }
            }
        }
    }

    let mut bwd = vec![[ninf; STATES]; len];
    for (s, b) in bwd[len - 1].iter_mut().enumerate() {
        if state_seen(s) {
            *b = F::zero();
        }
    }
    for t in (0..len - 1).rev() {
        for s in 0..STATES {
            let prev = state_link(s);
            let mut acc = ninf;
            for cur in Link::ALL {
                if allowed(t + 1, len, Some(prev), cur) {
                    let rest = bwd[t + 1][advance(s, cur)];
                    if rest > ninf {
                        acc = log_add(acc, scorer.score(t + 1, PrevLink::Link(prev), cur) + rest);
                    }
                }
            }
            bwd[t][s] = acc;
        }
    }

    let log_z = log_sum_exp((0..STATES).map(|s| fwd[len - 1][s] + bwd[len - 1][s]));
    if log_z.is_nan() || log_z == ninf {
        return Err(InferenceError::ZeroMass);
    }

    let marginals = (0..len)
        .map(|t| {
            let mut m = [F::zero(); 3];
            for l in Link::ALL {
                let joint =
                    log_sum_exp([state(l, false), state(l, true)].map(|s| fwd[t][s] + bwd[t][s]));
                m[l.index()] = (joint - log_z).exp();
            }
            m
        })
        .collect();

    Ok(Posterior { marginals, log_z })
}

/// Exhaustive reference result.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce<F> {
    pub best: DecodeResult<F>,
    pub log_z: F,
    pub marginals: Vec<[F; 3]>,
}

/// Enumerates all `3^len` label sequences in lexicographic order, keeping the
/// admissible ones. Reference implementation for [`viterbi`] and
/// [`forward_backward`].
pub fn brute_force<F: Scalar, S: SliceScorer<F>>(
    scorer: &S,
) -> Result<BruteForce<F>, InferenceError> {
    let len = scorer.len();
    if len > BRUTE_FORCE_MAX_LEN {
        return Err(InferenceError::TooLong(len));
    }
    let total = 3usize.pow(len as u32);
    let mut best: Option<(F, Vec<Link>)> = None;
    let mut admissible: Vec<(Vec<Link>, F)> = Vec::new();
    for code in 0..total {
        let mut labels = vec![Link::None; len];
        let mut rest = code;
        for t in (0..len).rev() {
            labels[t] = Link::from_index(rest % 3);
            rest /= 3;
        }
        if !is_admissible(&labels) {
            continue;
        }
        let score = sequence_score(scorer, &labels);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, labels.clone()));
        }
        admissible.push((labels, score));
    }

    let (log_score, labels) = best.ok_or(InferenceError::ZeroMass)?;
    let log_z = log_sum_exp(admissible.iter().map(|(_, s)| *s));
    let marginals = (0..len)
        .map(|t| {
            let mut m = [F::zero(); 3];
            for l in Link::ALL {
                let mass = log_sum_exp(
                    admissible
                        .iter()
                        .filter(|(seq, _)| seq[t] == l)
                        .map(|(_, s)| *s),
                );
                m[l.index()] = (mass - log_z).exp();
            }
            m
        })
        .collect();

    Ok(BruteForce {
        best: DecodeResult {
            labels,
            log_score,
            valid: log_score > F::neg_infinity(),
        },
        log_z,
        marginals,
    })
}
