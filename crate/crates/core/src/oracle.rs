//! Layered encoding of dependency trees.
//!
//! A sentence is parsed by repeatedly labelling every token of the current
//! string `LEFT`, `RIGHT` or `NONE`, removing the tokens that were linked to
//! an adjacent head, and recording the removal in the head's comp counters.
//! This module converts gold trees into that sequence of layers and replays
//! labelled layers back into trees.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{is_projective, validate_tree, DepTree, Sentence, TreeViolation};

/// Attachment decision for one token of a layer.
///
/// The declaration order is the decoding tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Link {
    /// Head is the left neighbour.
    Left,
    /// Head is the right neighbour.
    Right,
    /// Postponed to a later layer.
    None,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::Left, Link::Right, Link::None];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Link {
        Link::ALL[i]
    }

    pub fn is_link(self) -> bool {
        self != Link::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Link::Left => "LEFT",
            Link::Right => "RIGHT",
            Link::None => "NONE",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LEFT" => Ok(Link::Left),
            "RIGHT" => Ok(Link::Right),
            "NONE" => Ok(Link::None),
            other => Err(format!("unknown link '{other}'")),
        }
    }
}

/// Saturating count of attached dependents on one side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompValue {
    #[default]
    None,
    One,
    Many,
}

impl CompValue {
    pub const ALL: [CompValue; 3] = [CompValue::None, CompValue::One, CompValue::Many];

    pub fn increment(self) -> CompValue {
        match self {
            CompValue::None => CompValue::One,
            CompValue::One | CompValue::Many => CompValue::Many,
        }
    }

    pub fn from_count(n: usize) -> CompValue {
        match n {
            0 => CompValue::None,
            1 => CompValue::One,
            _ => CompValue::Many,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CompValue::None => "NONE",
            CompValue::One => "ONE",
            CompValue::Many => "MANY",
        }
    }
}

impl fmt::Display for CompValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A surviving token of one compression level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayerToken {
    /// 1-based position in the original sentence.
    pub orig_index: usize,
    pub lcomp: CompValue,
    pub rcomp: CompValue,
    pub label: Link,
}

impl LayerToken {
    pub fn fresh(orig_index: usize) -> Self {
        LayerToken {
            orig_index,
            lcomp: CompValue::None,
            rcomp: CompValue::None,
            label: Link::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layer {
    pub tokens: Vec<LayerToken>,
}

impl Layer {
    /// The first layer of an `n`-token sentence: every token, no comps.
    pub fn initial(n: usize) -> Layer {
        Layer {
            tokens: (1..=n).map(LayerToken::fresh).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn labels(&self) -> Vec<Link> {
        self.tokens.iter().map(|t| t.label).collect()
    }

    pub fn with_labels(&self, labels: &[Link]) -> Layer {
        assert_eq!(labels.len(), self.len());
        Layer {
            tokens: self
                .tokens
                .iter()
                .zip(labels)
                .map(|(t, &label)| LayerToken { label, ..*t })
                .collect(),
        }
    }

    pub fn orig_indices(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.orig_index).collect()
    }
}

/// A `(dependent, head)` pair of original 1-based positions.
pub type Attachment = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("tree cannot be linearized: {0}")]
    InvalidTree(TreeViolation),
    #[error("expected {expected} labels, found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("first token of a layer cannot link LEFT")]
    LeftAtStart,
    #[error("last token of a layer cannot link RIGHT")]
    RightAtEnd,
    #[error("token at position {0} and its right neighbour link to each other")]
    MutualHeads(usize),
    #[error("layer {0} does not follow from the labels of the previous layer")]
    LayerMismatch(usize),
    #[error("final layer has {0} tokens, expected exactly one")]
    UnfinishedLayers(usize),
    #[error("no layers to replay")]
    NoLayers,
    #[error("gold tree allows no attachment at layer {0}")]
    Stuck(usize),
    #[error("replayed attachments do not form a tree: {0}")]
    ReplayTree(TreeViolation),
}

/// Checks the boundary and adjacency constraints of a label sequence.
pub fn check_labels(labels: &[Link]) -> Result<(), OracleError> {
    if labels.first() == Some(&Link::Left) {
        return Err(OracleError::LeftAtStart);
    }
    if labels.last() == Some(&Link::Right) {
        return Err(OracleError::RightAtEnd);
    }
    if let Some(p) = labels
        .windows(2)
        .position(|w| w[0] == Link::Right && w[1] == Link::Left)
    {
        return Err(OracleError::MutualHeads(p + 1));
    }
    Ok(())
}

/// Attaches every linked token to its neighbour and removes it.
///
/// Surviving heads get one comp increment per dependent removed from that
/// side. The returned layer's labels are reset to `NONE`.
pub fn apply_labels(
    layer: &Layer,
    labels: &[Link],
) -> Result<(Layer, Vec<Attachment>), OracleError> {
    if labels.len() != layer.len() {
        return Err(OracleError::LabelCount {
            expected: layer.len(),
            found: labels.len(),
        });
    }
    check_labels(labels)?;

    let mut tokens = layer.tokens.clone();
    let mut attachments = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        match label {
            Link::Left => {
                attachments.push((tokens[i].orig_index, tokens[i - 1].orig_index));
                tokens[i - 1].rcomp = tokens[i - 1].rcomp.increment();
            }
            Link::Right => {
                attachments.push((tokens[i].orig_index, tokens[i + 1].orig_index));
                tokens[i + 1].lcomp = tokens[i + 1].lcomp.increment();
            }
            Link::None => {}
        }
    }
    let next = tokens
        .into_iter()
        .zip(labels)
        .filter(|(_, &l)| l == Link::None)
        .map(|(t, _)| LayerToken {
            label: Link::None,
            ..t
        })
        .collect();
    Ok((Layer { tokens: next }, attachments))
}

/// Gold layers for a projective tree.
///
/// A token is labelled `LEFT`/`RIGHT` when its head is its immediate
/// neighbour in the current layer and all of its own dependents are already
/// attached. The last layer holds the root token alone.
pub fn derive_layers(tree: &DepTree) -> Result<Vec<Layer>, OracleError> {
    validate_tree(tree.heads()).map_err(OracleError::InvalidTree)?;
    debug_assert!(is_projective(tree.heads()));

    let mut pending = tree.dependent_counts();
    let mut layer = Layer::initial(tree.len());
    let mut layers = Vec::new();
    while layer.len() > 1 {
        let ids = layer.orig_indices();
        let labels: Vec<Link> = ids
            .iter()
            .enumerate()
            .map(|(i, &tok)| {
                let head = tree.head(tok);
                if pending[tok] > 0 {
                    Link::None
                } else if i > 0 && ids[i - 1] == head {
                    Link::Left
                } else if i + 1 < ids.len() && ids[i + 1] == head {
                    Link::Right
                } else {
                    Link::None
                }
            })
            .collect();
        if labels.iter().all(|&l| l == Link::None) {
            return Err(OracleError::Stuck(layers.len() + 1));
        }
        let (next, attachments) = apply_labels(&layer, &labels)?;
        for (_, head) in attachments {
            pending[head] -= 1;
        }
        layers.push(layer.with_labels(&labels));
        layer = next;
    }
    layers.push(layer);
    Ok(layers)
}

/// Rebuilds a tree from labelled layers.
///
/// Each layer must be exactly what applying the previous layer's labels
/// produces; the last layer must hold a single token, which becomes the root.
pub fn replay(layers: &[Layer]) -> Result<DepTree, OracleError> {
    let last = layers.last().ok_or(OracleError::NoLayers)?;
    if last.len() != 1 {
        return Err(OracleError::UnfinishedLayers(last.len()));
    }
    let n = layers[0].len();
    let mut heads = vec![usize::MAX; n];
    for (k, pair) in layers.windows(2).enumerate() {
        let (next, attachments) = apply_labels(&pair[0], &pair[0].labels())?;
        let expected: Vec<_> = next
            .tokens
            .iter()
            .map(|t| (t.orig_index, t.lcomp, t.rcomp))
            .collect();
        let found: Vec<_> = pair[1]
            .tokens
            .iter()
            .map(|t| (t.orig_index, t.lcomp, t.rcomp))
            .collect();
        if expected != found {
            return Err(OracleError::LayerMismatch(k + 2));
        }
        for (dep, head) in attachments {
            heads[dep - 1] = head;
        }
    }
    let root = last.tokens[0].orig_index;
    heads[root - 1] = 0;
    if let Some(i) = heads.iter().position(|&h| h == usize::MAX) {
        // a token missing from the first layer never received a head
        return Err(OracleError::ReplayTree(TreeViolation::HeadOutOfRange {
            token: i + 1,
            head: usize::MAX,
        }));
    }
    validate_tree(&heads).map_err(OracleError::ReplayTree)?;
    Ok(DepTree::new(heads))
}

/// Writes layers as text blocks: a `# sentence S layer L` line, then one
/// `orig_index FORM POS lcomp rcomp label` line per token (tab-separated),
/// then a blank line.
pub fn write_layers<W: Write>(
    w: &mut W,
    sentence_no: usize,
    sentence: &Sentence,
    layers: &[Layer],
) -> io::Result<()> {
    for (k, layer) in layers.iter().enumerate() {
        writeln!(w, "# sentence {sentence_no} layer {}", k + 1)?;
        for t in &layer.tokens {
            let tok = &sentence.tokens[t.orig_index - 1];
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.orig_index, tok.form, tok.pos, t.lcomp, t.rcomp, t.label
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}
