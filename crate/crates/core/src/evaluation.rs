//! Attachment metrics and baseline parsers.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::ops::AddAssign;

use rand::Rng;
use thiserror::Error;

use crate::corpus::DepTree;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("predicted tree has {pred} tokens, gold tree has {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("OOV mask has {mask} entries for {gold} tokens")]
    MaskMismatch { mask: usize, gold: usize },
    #[error("no sentences to aggregate")]
    Empty,
}

/// A correct/total pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bucket {
    pub correct: u64,
    pub total: u64,
}

impl Bucket {
    fn record(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as u64;
    }

    /// `None` for an empty bucket.
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

impl AddAssign for Bucket {
    fn add_assign(&mut self, rhs: Bucket) {
        self.correct += rhs.correct;
        self.total += rhs.total;
    }
}

/// Counts for one or more sentences. Token buckets count tokens; `root` and
/// `exact` count sentences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub sentences: u64,
    pub directed: Bucket,
    pub undirected: Bucket,
    pub root: Bucket,
    pub non_root: Bucket,
    pub oov: Bucket,
    pub in_vocab: Bucket,
    pub exact: Bucket,
}

impl AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        self.sentences += rhs.sentences;
        self.directed += rhs.directed;
        self.undirected += rhs.undirected;
        self.root += rhs.root;
        self.non_root += rhs.non_root;
        self.oov += rhs.oov;
        self.in_vocab += rhs.in_vocab;
        self.exact += rhs.exact;
    }
}

/// Scores one predicted tree against gold.
///
/// A token is undirected-correct when the unordered pair `{token, predicted
/// head}` is an edge of the gold tree, with `{root, ROOT}` as the root edge.
/// `pred` need not be a valid tree.
pub fn score(pred: &DepTree, gold: &DepTree, oov_mask: &[bool]) -> Result<Tally, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if oov_mask.len() != gold.len() {
        return Err(EvalError::MaskMismatch {
            mask: oov_mask.len(),
            gold: gold.len(),
        });
    }

    let edges: HashSet<(usize, usize)> = gold
        .heads()
        .iter()
        .enumerate()
        .map(|(i, &h)| ordered(i + 1, h))
        .collect();

    let mut tally = Tally {
        sentences: 1,
        ..Tally::default()
    };
    let mut all_correct = true;
    for (i, (&p, &g)) in pred.heads().iter().zip(gold.heads()).enumerate() {
        let ok = p == g;
        all_correct &= ok;
        tally.directed.record(ok);
        tally.undirected.record(edges.contains(&ordered(i + 1, p)));
        if g != 0 {
            tally.non_root.record(ok);
        }
        if oov_mask[i] {
            tally.oov.record(ok);
        } else {
            tally.in_vocab.record(ok);
        }
    }
    tally
        .root
        .record(pred.root().is_some() && pred.root() == gold.root());
    tally.exact.record(all_correct);
    Ok(tally)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Aggregated metrics: token buckets are micro-averaged, `root` and `exact`
/// are per sentence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub tally: Tally,
}

impl EvalReport {
    pub fn directed(&self) -> f64 {
        self.tally.directed.fraction().unwrap_or(0.0)
    }

    pub fn undirected(&self) -> f64 {
        self.tally.undirected.fraction().unwrap_or(0.0)
    }

    pub fn root(&self) -> f64 {
        self.tally.root.fraction().unwrap_or(0.0)
    }

    pub fn exact(&self) -> f64 {
        self.tally.exact.fraction().unwrap_or(0.0)
    }

    pub fn non_root(&self) -> Option<f64> {
        self.tally.non_root.fraction()
    }

    pub fn oov(&self) -> Option<f64> {
        self.tally.oov.fraction()
    }

    pub fn in_vocab(&self) -> Option<f64> {
        self.tally.in_vocab.fraction()
    }

    /// Rows in output order.
    pub fn rows(&self) -> [(&'static str, Bucket); 7] {
        let t = &self.tally;
        [
            ("directed", t.directed),
            ("undirected", t.undirected),
            ("root", t.root),
            ("non-root", t.non_root),
            ("oov", t.oov),
            ("exact", t.exact),
            ("in-vocab", t.in_vocab),
        ]
    }

    /// Tab-separated table: header, one row per metric (`n/a` for empty
    /// buckets), then sentence and token counts.
    pub fn write_table<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "metric\taccuracy\tcorrect\ttotal")?;
        for (name, b) in self.rows() {
            match b.fraction() {
                Some(f) => writeln!(w, "{name}\t{f:.4}\t{}\t{}", b.correct, b.total)?,
                None => writeln!(w, "{name}\tn/a\t{}\t{}", b.correct, b.total)?,
            }
        }
        writeln!(w, "sentences\t{}", self.tally.sentences)?;
        writeln!(w, "tokens\t{}", self.tally.directed.total)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_table(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

pub fn aggregate<I: IntoIterator<Item = Tally>>(tallies: I) -> Result<EvalReport, EvalError> {
    let mut total = Tally::default();
    for t in tallies {
        total += t;
    }
    if total.sentences == 0 {
        return Err(EvalError::Empty);
    }
    Ok(EvalReport { tally: total })
}

/// Every token headed by its right neighbour; the last token is the root.
pub fn baseline_adjacent(n: usize) -> DepTree {
    assert!(n >= 1);
    DepTree::new((1..=n).map(|i| if i == n { 0 } else { i + 1 }).collect())
}

/// Uniform sampler over single-root projective trees of a fixed length.
///
/// Counts are computed with the usual complete/incomplete span
/// decomposition over positions `0..=n` (0 is ROOT), then a tree is drawn
/// top-down with every split chosen in proportion to the number of trees it
/// leads to. Counts are kept as `f64`, which is exact up to length 20 and
/// overflows beyond a few hundred tokens.
#[derive(Clone, Debug)]
pub struct ProjectiveSampler {
    n: usize,
    // [i][j] for 0 <= i <= j <= n
    complete_right: Vec<Vec<f64>>,
    complete_left: Vec<Vec<f64>>,
    incomplete: Vec<Vec<f64>>,
}

impl ProjectiveSampler {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let size = n + 1;
        let mut cr = vec![vec![0.0; size]; size];
        let mut cl = vec![vec![0.0; size]; size];
        // arcs i->j and j->i over the same span have the same count
        let mut inc = vec![vec![0.0; size]; size];
        for i in 0..size {
            cr[i][i] = 1.0;
            cl[i][i] = 1.0;
        }
        for width in 1..size {
            for i in 0..size - width {
                let j = i + width;
                inc[i][j] = (i..j).map(|k| cr[i][k] * cl[k + 1][j]).sum();
                cr[i][j] = (i + 1..=j).map(|k| inc[i][k] * cr[k][j]).sum();
                cl[i][j] = (i..j).map(|k| cl[i][k] * inc[k][j]).sum();
            }
        }
        ProjectiveSampler {
            n,
            complete_right: cr,
            complete_left: cl,
            incomplete: inc,
        }
    }

    /// Number of single-root projective trees of length `n`.
    pub fn count(&self) -> f64 {
        (1..=self.n).map(|r| self.root_weight(r)).sum()
    }

    fn root_weight(&self, r: usize) -> f64 {
        self.complete_left[1][r] * self.complete_right[r][self.n]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DepTree {
        let n = self.n;
        let mut heads = vec![0usize; n];
        let r = pick(rng, 1..=n, |r| self.root_weight(r));
        heads[r - 1] = 0;
        let mut stack = vec![Span::CompleteLeft(1, r), Span::CompleteRight(r, n)];
        while let Some(span) = stack.pop() {
            match span {
                Span::CompleteRight(i, j) if i < j => {
                    let k = pick(rng, i + 1..=j, |k| {
                        self.incomplete[i][k] * self.complete_right[k][j]
                    });
                    stack.push(Span::Arc { head: i, dep: k });
                    stack.push(Span::CompleteRight(k, j));
                }
                Span::CompleteLeft(i, j) if i < j => {
                    let k = pick(rng, i..=j - 1, |k| {
                        self.complete_left[i][k] * self.incomplete[k][j]
                    });
                    stack.push(Span::CompleteLeft(i, k));
                    stack.push(Span::Arc { head: j, dep: k });
                }
                Span::Arc { head, dep } => {
                    heads[dep - 1] = head;
                    let (i, j) = (head.min(dep), head.max(dep));
                    let k = pick(rng, i..=j - 1, |k| {
                        self.complete_right[i][k] * self.complete_left[k + 1][j]
                    });
                    stack.push(Span::CompleteRight(i, k));
                    stack.push(Span::CompleteLeft(k + 1, j));
                }
                _ => {}
            }
        }
        DepTree::new(heads)
    }
}

enum Span {
    CompleteRight(usize, usize),
    CompleteLeft(usize, usize),
    Arc { head: usize, dep: usize },
}

fn pick<R: Rng + ?Sized>(
    rng: &mut R,
    range: std::ops::RangeInclusive<usize>,
    weight: impl Fn(usize) -> f64,
) -> usize {
    let candidates: Vec<(usize, f64)> = range.map(|k| (k, weight(k))).collect();
    let total: f64 = candidates.iter().map(|(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for &(k, w) in &candidates {
        if u < w {
            return k;
        }
        u -= w;
    }
    // rounding left u at the top of the range
    candidates
        .iter()
        .rev()
        .find(|(_, w)| *w > 0.0)
        .map(|(k, _)| *k)
        .expect("at least one split has positive weight")
}

/// A projective tree drawn uniformly at random.
pub fn baseline_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DepTree {
    ProjectiveSampler::new(n).sample(rng)
}
