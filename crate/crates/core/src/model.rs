//! Count-based link model.
//!
//! The model factorizes the score of a label `L_t` at position `t` as a
//! transition term `P(L_t | L_{t-1})` times eight emission terms
//! `P(f | L_t)`, one per observed feature. All parameters are integer
//! co-occurrence counts; probabilities are additively smoothed on demand:
//!
//! ```text
//! P(v | ctx) = (count(ctx, v) + alpha) / (count(ctx) + alpha * |values|)
//! ```
//!
//! Every emission is conditioned on a single link, so the product over
//! features is a product of experts rather than a normalized joint.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::corpus::{EncodedSentence, Vocab, VocabError};
use crate::oracle::{CompValue, Layer, Link};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &str = "linkchain-model";
pub const MODEL_VERSION: &str = "v1";

/// Left context of a transition: a link, or the sentence start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrevLink {
    Link(Link),
    Boundary,
}

impl PrevLink {
    pub const ALL: [PrevLink; 4] = [
        PrevLink::Link(Link::Left),
        PrevLink::Link(Link::Right),
        PrevLink::Link(Link::None),
        PrevLink::Boundary,
    ];

    pub fn index(self) -> usize {
        match self {
            PrevLink::Link(l) => l.index(),
            PrevLink::Boundary => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrevLink::Link(l) => l.as_str(),
            PrevLink::Boundary => "BOUNDARY",
        }
    }

    fn parse(s: &str) -> Option<PrevLink> {
        match s {
            "BOUNDARY" => Some(PrevLink::Boundary),
            other => other.parse().ok().map(PrevLink::Link),
        }
    }
}

impl From<Link> for PrevLink {
    fn from(l: Link) -> Self {
        PrevLink::Link(l)
    }
}

/// The observed variables of one slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Feature {
    Word,
    Tag,
    LComp,
    RComp,
    NextWord,
    NextTag,
    PrevRComp,
    NextLComp,
}

impl Feature {
    pub const ALL: [Feature; 8] = [
        Feature::Word,
        Feature::Tag,
        Feature::LComp,
        Feature::RComp,
        Feature::NextWord,
        Feature::NextTag,
        Feature::PrevRComp,
        Feature::NextLComp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Word => "word",
            Feature::Tag => "tag",
            Feature::LComp => "lcomp",
            Feature::RComp => "rcomp",
            Feature::NextWord => "next-word",
            Feature::NextTag => "next-tag",
            Feature::PrevRComp => "prev-rcomp",
            Feature::NextLComp => "next-lcomp",
        }
    }

    /// Number of values, boundary code included where the feature looks at
    /// a neighbour.
    pub fn cardinality(self, vocab: &Vocab) -> usize {
        match self {
            Feature::Word => vocab.word_cardinality(),
            Feature::Tag => vocab.tag_cardinality(),
            Feature::LComp | Feature::RComp => 3,
            Feature::NextWord => vocab.word_cardinality() + 1,
            Feature::NextTag => vocab.tag_cardinality() + 1,
            Feature::PrevRComp | Feature::NextLComp => 4,
        }
    }

    /// Code used for neighbour features that fall outside the layer.
    pub fn boundary_code(self, vocab: &Vocab) -> Option<u32> {
        match self {
            Feature::NextWord | Feature::NextTag | Feature::PrevRComp | Feature::NextLComp => {
                Some(self.cardinality(vocab) as u32 - 1)
            }
            _ => None,
        }
    }
}

/// Feature values of one position of a layer, indexed by [`Feature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureView {
    pub values: [u32; 8],
}

impl FeatureView {
    pub fn get(&self, f: Feature) -> u32 {
        self.values[f as usize]
    }
}

/// Builds the feature view of every position of `layer`.
pub fn feature_views(vocab: &Vocab, sentence: &EncodedSentence, layer: &Layer) -> Vec<FeatureView> {
    let toks = &layer.tokens;
    let comp = |c: CompValue| c.index() as u32;
    let comp_boundary = Feature::PrevRComp.boundary_code(vocab).unwrap();
    let word_boundary = Feature::NextWord.boundary_code(vocab).unwrap();
    let tag_boundary = Feature::NextTag.boundary_code(vocab).unwrap();
    (0..toks.len())
        .map(|t| {
            let cur = &toks[t];
            let next = toks.get(t + 1);
            let prev = t.checked_sub(1).map(|p| &toks[p]);
            let mut values = [0u32; 8];
            values[Feature::Word as usize] = sentence.words[cur.orig_index - 1];
            values[Feature::Tag as usize] = sentence.tags[cur.orig_index - 1];
            values[Feature::LComp as usize] = comp(cur.lcomp);
            values[Feature::RComp as usize] = comp(cur.rcomp);
            values[Feature::NextWord as usize] =
                next.map_or(word_boundary, |n| sentence.words[n.orig_index - 1]);
            values[Feature::NextTag as usize] =
                next.map_or(tag_boundary, |n| sentence.tags[n.orig_index - 1]);
            values[Feature::PrevRComp as usize] = prev.map_or(comp_boundary, |p| comp(p.rcomp));
            values[Feature::NextLComp as usize] = next.map_or(comp_boundary, |n| comp(n.lcomp));
            FeatureView { values }
        })
        .collect()
}

/// Conditional probability table backed by exact counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpTable {
    contexts: usize,
    values: usize,
    counts: Vec<u64>,
    totals: Vec<u64>,
}

impl CpTable {
    pub fn new(contexts: usize, values: usize) -> Self {
        CpTable {
            contexts,
            values,
            counts: vec![0; contexts * values],
            totals: vec![0; contexts],
        }
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn values(&self) -> usize {
        self.values
    }

    pub fn add(&mut self, ctx: usize, value: usize, count: u64) {
        assert!(
            ctx < self.contexts && value < self.values,
            "cell out of range"
        );
        self.counts[ctx * self.values + value] += count;
        self.totals[ctx] += count;
    }

    pub fn observe(&mut self, ctx: usize, value: usize) {
        self.add(ctx, value, 1);
    }

    pub fn count(&self, ctx: usize, value: usize) -> u64 {
        self.counts[ctx * self.values + value]
    }

    pub fn context_total(&self, ctx: usize) -> u64 {
        self.totals[ctx]
    }

    /// Smoothed `P(value | ctx)`. Zero when the denominator vanishes.
    pub fn prob<F: Scalar>(&self, ctx: usize, value: usize, alpha: F) -> F {
        let num = F::from_count(self.count(ctx, value)) + alpha;
        let den = F::from_count(self.totals[ctx]) + alpha * F::from_count(self.values as u64);
        if den <= F::zero() {
            F::zero()
        } else {
            num / den
        }
    }

    pub fn log_prob<F: Scalar>(&self, ctx: usize, value: usize, alpha: F) -> F {
        self.prob(ctx, value, alpha).ln()
    }

    pub fn merge(&mut self, other: &CpTable) {
        assert_eq!(
            (self.contexts, self.values),
            (other.contexts, other.values),
            "table shapes must match"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
    }

    /// Non-zero cells as `(ctx, value, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / self.values, i % self.values, c))
    }

    pub fn total(&self) -> u64 {
        self.totals.iter().sum()
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("smoothing mass must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("models were built over different vocabularies")]
    VocabMismatch,
    #[error("not a {MODEL_MAGIC} file: {0}")]
    BadHeader(String),
    #[error("unsupported model version '{0}', expected {MODEL_VERSION}")]
    Version(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("model file ends early after line {0}")]
    Truncated(usize),
    #[error("vocabulary section: {0}")]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Trained link model: vocabulary, transition table and one emission table
/// per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    vocab: Vocab,
    alpha: f64,
    transitions: CpTable,
    emissions: Vec<CpTable>,
}

impl Model {
    /// An untrained model over `vocab`.
    pub fn new(vocab: Vocab, alpha: f64) -> Result<Model, ModelError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        let emissions = Feature::ALL
            .iter()
            .map(|f| CpTable::new(Link::ALL.len(), f.cardinality(&vocab)))
            .collect();
        Ok(Model {
            vocab,
            alpha,
            transitions: CpTable::new(PrevLink::ALL.len(), Link::ALL.len()),
            emissions,
        })
    }

    /// Counts every labelled layer of every sentence.
    pub fn train<'a, I>(vocab: Vocab, alpha: f64, data: I) -> Result<Model, ModelError>
    where
        I: IntoIterator<Item = (&'a EncodedSentence, &'a [Layer])>,
    {
        let mut model = Model::new(vocab, alpha)?;
        for (sentence, layers) in data {
            model.observe_sentence(sentence, layers);
        }
        Ok(model)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn transitions(&self) -> &CpTable {
        &self.transitions
    }

    pub fn emission(&self, f: Feature) -> &CpTable {
        &self.emissions[f as usize]
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), ModelError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        self.alpha = alpha;
        Ok(())
    }

    pub fn observe_sentence(&mut self, sentence: &EncodedSentence, layers: &[Layer]) {
        for layer in layers {
            self.observe_layer(sentence, layer);
        }
    }

    /// Adds the gold labels of one layer. Single-token layers carry no
    /// decision and are skipped.
    pub fn observe_layer(&mut self, sentence: &EncodedSentence, layer: &Layer) {
        if layer.len() < 2 {
            return;
        }
        let views = feature_views(&self.vocab, sentence, layer);
        let mut prev = PrevLink::Boundary;
        for (tok, view) in layer.tokens.iter().zip(&views) {
            let label = tok.label.index();
            self.transitions.observe(prev.index(), label);
            for f in Feature::ALL {
                self.emissions[f as usize].observe(label, view.get(f) as usize);
            }
            prev = PrevLink::Link(tok.label);
        }
    }

    /// Adds another model's counts. Both must share the same vocabulary.
    pub fn merge(&mut self, other: &Model) -> Result<(), ModelError> {
        if self.vocab != other.vocab {
            return Err(ModelError::VocabMismatch);
        }
        self.transitions.merge(&other.transitions);
        for (a, b) in self.emissions.iter_mut().zip(&other.emissions) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn transition_log_prob<F: Scalar>(&self, prev: PrevLink, cur: Link) -> F {
        let alpha = F::from_f64_lossy(self.alpha);
        self.transitions.log_prob(prev.index(), cur.index(), alpha)
    }

    /// Sum of the eight emission log-probabilities of `view` under `cur`.
    pub fn emission_log_score<F: Scalar>(&self, view: &FeatureView, cur: Link) -> F {
        let alpha = F::from_f64_lossy(self.alpha);
        Feature::ALL.iter().fold(F::zero(), |acc, &f| {
            acc + self.emissions[f as usize].log_prob(cur.index(), view.get(f) as usize, alpha)
        })
    }

    /// `log P(cur | prev) + sum_f log P(f | cur)`; `-inf` when a factor is
    /// zero under `alpha = 0`.
    pub fn slice_log_score<F: Scalar>(&self, view: &FeatureView, prev: PrevLink, cur: Link) -> F {
        self.transition_log_prob::<F>(prev, cur) + self.emission_log_score::<F>(view, cur)
    }

    pub fn feature_views(&self, sentence: &EncodedSentence, layer: &Layer) -> Vec<FeatureView> {
        feature_views(&self.vocab, sentence, layer)
    }

    pub fn save<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{MODEL_MAGIC} {MODEL_VERSION} alpha={}", self.alpha)?;
        self.vocab.write_dump(w)?;
        write_table(
            w,
            "transition",
            &self.transitions,
            |c| PrevLink::ALL[c].as_str().to_owned(),
            |v| Link::from_index(v).as_str().to_owned(),
        )?;
        for f in Feature::ALL {
            write_table(
                w,
                f.name(),
                &self.emissions[f as usize],
                |c| Link::from_index(c).as_str().to_owned(),
                |v| v.to_string(),
            )?;
        }
        writeln!(w, "end")
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Model, ModelError> {
        let mut lines = reader.lines();
        let mut line = 0usize;

        let header = match lines.next() {
            Some(l) => {
                line += 1;
                l?
            }
            None => return Err(ModelError::BadHeader("empty input".into())),
        };
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MODEL_MAGIC) {
            return Err(ModelError::BadHeader(header.clone()));
        }
        match parts.next() {
            Some(MODEL_VERSION) => {}
            Some(v) => return Err(ModelError::Version(v.to_owned())),
            None => return Err(ModelError::BadHeader(header.clone())),
        }
        let alpha: f64 = parts
            .next()
            .and_then(|p| p.strip_prefix("alpha="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ModelError::BadHeader(header.clone()))?;

        let vocab = Vocab::read_dump(&mut lines, &mut line)?;
        let mut model = Model::new(vocab, alpha)?;

        read_table(
            &mut lines,
            &mut line,
            "transition",
            &mut model.transitions,
            |s| PrevLink::parse(s).map(PrevLink::index),
            |s| s.parse::<Link>().ok().map(Link::index),
        )?;
        for f in Feature::ALL {
            read_table(
                &mut lines,
                &mut line,
                f.name(),
                &mut model.emissions[f as usize],
                |s| s.parse::<Link>().ok().map(Link::index),
                |s| s.parse::<usize>().ok(),
            )?;
        }
        match lines.next() {
            Some(l) => {
                line += 1;
                if l?.trim() != "end" {
                    return Err(format_err(line, "expected 'end'"));
                }
            }
            None => return Err(ModelError::Truncated(line)),
        }
        Ok(model)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} words, {} tags, {} transition events, alpha={}",
            self.vocab.num_words(),
            self.vocab.num_tags(),
            self.transitions.total(),
            self.alpha
        )
    }
}

fn format_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Format {
        line,
        message: message.into(),
    }
}

fn write_table<W: Write>(
    w: &mut W,
    name: &str,
    table: &CpTable,
    ctx_name: impl Fn(usize) -> String,
    value_name: impl Fn(usize) -> String,
) -> io::Result<()> {
    let cells: Vec<_> = table.nonzero().collect();
    writeln!(
        w,
        "[table {name}] contexts={} values={} entries={}",
        table.contexts(),
        table.values(),
        cells.len()
    )?;
    for (c, v, n) in cells {
        writeln!(w, "{}|{}|{}", ctx_name(c), value_name(v), n)?;
    }
    Ok(())
}

fn read_table<I>(
    lines: &mut I,
    line: &mut usize,
    name: &str,
    table: &mut CpTable,
    parse_ctx: impl Fn(&str) -> Option<usize>,
    parse_value: impl Fn(&str) -> Option<usize>,
) -> Result<(), ModelError>
where
    I: Iterator<Item = io::Result<String>>,
{
    let mut next = |line: &mut usize| -> Result<String, ModelError> {
        match lines.next() {
            Some(l) => {
                *line += 1;
                Ok(l?)
            }
            None => Err(ModelError::Truncated(*line)),
        }
    };

    let header = next(line)?;
    let prefix = format!("[table {name}] ");
    let rest = header
        .strip_prefix(&prefix)
        .ok_or_else(|| format_err(*line, format!("expected section '[table {name}]'")))?;
    let mut dims = [None; 3];
    for part in rest.split_whitespace() {
        let (key, val) = part.split_once('=').unwrap_or((part, ""));
        let slot = match key {
            "contexts" => 0,
            "values" => 1,
            "entries" => 2,
            _ => return Err(format_err(*line, format!("unknown key '{key}'"))),
        };
        dims[slot] = val.parse::<usize>().ok();
    }
    let [Some(contexts), Some(values), Some(entries)] = dims else {
        return Err(format_err(
            *line,
            "table header needs contexts, values and entries",
        ));
    };
    if contexts != table.contexts() || values != table.values() {
        return Err(format_err(
            *line,
            format!(
                "table {name} is {contexts}x{values}, vocabulary implies {}x{}",
                table.contexts(),
                table.values()
            ),
        ));
    }
    for _ in 0..entries {
        let l = next(line)?;
        let mut cols = l.split('|');
        let (Some(c), Some(v), Some(n), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(format_err(*line, "expected <context>|<value>|<count>"));
        };
        let ctx = parse_ctx(c).ok_or_else(|| format_err(*line, format!("bad context '{c}'")))?;
        let value = parse_value(v)
            .filter(|&v| v < values)
            .ok_or_else(|| format_err(*line, format!("bad value '{v}'")))?;
        let count: u64 = n
            .parse()
            .map_err(|_| format_err(*line, format!("bad count '{n}'")))?;
        table.add(ctx, value, count);
    }
    Ok(())
}
