//! Recursive parse loop: score the current layer, decode its labels,
//! attach and remove linked tokens, repeat until one token is left.

use crate::corpus::{DepTree, EncodedSentence};
use crate::inference::{
    forward_backward, viterbi, InferenceError, Lattice, Posterior, SliceScorer,
};
use crate::model::{Model, PrevLink};
use crate::oracle::{apply_labels, Layer, Link};
use crate::scalar::Scalar;

/// Produces the slice-score lattice of a layer.
pub trait LayerScorer<F: Scalar> {
    fn lattice(&self, sentence: &EncodedSentence, layer: &Layer) -> Lattice<F>;
}

impl<F: Scalar> LayerScorer<F> for Model {
    fn lattice(&self, sentence: &EncodedSentence, layer: &Layer) -> Lattice<F> {
        let views = self.feature_views(sentence, layer);
        Lattice::from_model(self, &views)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseResult {
    pub tree: DepTree,
    /// Every layer with its predicted labels; the last holds the root alone.
    pub layers: Vec<Layer>,
    /// Passes whose labels came from [`fallback`] instead of Viterbi.
    pub fallback_count: usize,
}

impl ParseResult {
    pub fn passes(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Parses with `f64` scores.
pub fn parse(model: &Model, sentence: &EncodedSentence) -> ParseResult {
    parse_with::<f64, _>(model, sentence)
}

/// Parses with any layer scorer and float type.
pub fn parse_with<F: Scalar, S: LayerScorer<F> + ?Sized>(
    scorer: &S,
    sentence: &EncodedSentence,
) -> ParseResult {
    let n = sentence.len();
    assert!(n >= 1, "cannot parse an empty sentence");
    let mut heads = vec![0usize; n];
    let mut layer = Layer::initial(n);
    let mut layers = Vec::new();
    let mut fallback_count = 0;

    while layer.len() > 1 {
        let lattice: Lattice<F> = scorer.lattice(sentence, &layer);
        let decoded = viterbi(&lattice);
        let labels = if decoded.valid {
            decoded.labels
        } else {
            fallback_count += 1;
            fallback(&lattice)
        };
        let (next, attachments) =
            apply_labels(&layer, &labels).expect("decoded labels satisfy layer constraints");
        debug_assert!(next.len() < layer.len());
        for (dep, head) in attachments {
            heads[dep - 1] = head;
        }
        layers.push(layer.with_labels(&labels));
        layer = next;
    }
    heads[layer.tokens[0].orig_index - 1] = 0;
    layers.push(layer);

    ParseResult {
        tree: DepTree::new(heads),
        layers,
        fallback_count,
    }
}

/// Single forced link for layers where every admissible sequence scores
/// `-inf`.
///
/// Picks the position and direction with the highest finite single-slice
/// score (as if all other labels were `NONE`), earliest position and `LEFT`
/// first on ties. With no finite option, links the first token `RIGHT`.
pub fn fallback<F: Scalar, S: SliceScorer<F>>(scorer: &S) -> Vec<Link> {
    let len = scorer.len();
    let mut labels = vec![Link::None; len];
    let mut best: Option<(F, usize, Link)> = None;
    for t in 0..len {
        let prev = if t == 0 {
            PrevLink::Boundary
        } else {
            PrevLink::Link(Link::None)
        };
        for cur in [Link::Left, Link::Right] {
            if (t == 0 && cur == Link::Left) || (t + 1 == len && cur == Link::Right) {
                continue;
            }
            let s = scorer.score(t, prev, cur);
            if s.is_finite() && best.is_none_or(|(b, _, _)| s > b) {
                best = Some((s, t, cur));
            }
        }
    }
    match best {
        Some((_, t, cur)) => labels[t] = cur,
        None if len > 0 => labels[0] = Link::Right,
        None => {}
    }
    labels
}

/// Posterior marginals of every pass of a finished parse, for diagnostics.
pub fn trace_marginals<F: Scalar, S: LayerScorer<F> + ?Sized>(
    scorer: &S,
    sentence: &EncodedSentence,
    result: &ParseResult,
) -> Vec<Result<Posterior<F>, InferenceError>> {
    result.layers[..result.layers.len() - 1]
        .iter()
        .map(|layer| forward_backward(&scorer.lattice(sentence, layer)))
        .collect()
}
