//! Test oracles and random instance generators shared by the integration
//! suites. Nothing here calls into the code path it is used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use linkchain::corpus::{EncodedSentence, Sentence};
use linkchain::evaluation::ProjectiveSampler;
use linkchain::model::FeatureView;
use linkchain::oracle::{CompValue, Layer, LayerToken, Link};
use linkchain::{build_vocab, DepTree, Model};
use rand::Rng;

/// Projectivity by the span definition: for every arc, every token strictly
/// between head and dependent descends from the head. ROOT is position 0
/// and heads the root token.
pub fn brute_is_projective(heads: &[usize]) -> bool {
    let n = heads.len();
    let descends = |mut tok: usize, anc: usize| -> bool {
        for _ in 0..=n {
            if tok == anc {
                return true;
            }
            if tok == 0 {
                return false;
            }
            tok = heads[tok - 1];
        }
        false
    };
    for (i, &h) in heads.iter().enumerate() {
        let d = i + 1;
        let (lo, hi) = (d.min(h), d.max(h));
        for between in lo + 1..hi {
            if !descends(between, h) {
                return false;
            }
        }
    }
    true
}

/// Every head vector of length `n` (entries `0..=n`, no self loops).
pub fn all_head_vectors(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for pos in 1..=n {
        let mut next = Vec::new();
        for prefix in &out {
            for h in 0..=n {
                if h != pos {
                    let mut v = prefix.clone();
                    v.push(h);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

/// Single root and every token reaches ROOT.
pub fn brute_is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    (1..=n).all(|start| {
        let mut cur = start;
        for _ in 0..=n {
            if cur == 0 {
                return true;
            }
            cur = heads[cur - 1];
        }
        false
    })
}

pub fn random_projective_tree<R: Rng>(rng: &mut R, max_len: usize) -> DepTree {
    let n = rng.gen_range(1..=max_len);
    ProjectiveSampler::new(n).sample(rng)
}

/// Head vector with arbitrary entries in `0..=n`; may be an invalid tree.
pub fn random_heads<R: Rng>(rng: &mut R, n: usize) -> DepTree {
    DepTree::new((0..n).map(|_| rng.gen_range(0..=n)).collect())
}

/// Sentence over a small random lexicon with the given tree.
pub fn random_sentence<R: Rng>(rng: &mut R, tree: &DepTree) -> Sentence {
    const FORMS: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
    const TAGS: [&str; 4] = ["X", "Y", "Z", "W"];
    Sentence::from_parts(tree.heads().iter().map(|&h| {
        (
            FORMS[rng.gen_range(0..FORMS.len())],
            TAGS[rng.gen_range(0..TAGS.len())],
            h,
        )
    }))
}

fn random_comp<R: Rng>(rng: &mut R) -> CompValue {
    CompValue::ALL[rng.gen_range(0..3)]
}

/// A layer of `len` tokens with random comps and labels.
pub fn random_layer<R: Rng>(rng: &mut R, len: usize) -> Layer {
    Layer {
        tokens: (1..=len)
            .map(|i| LayerToken {
                orig_index: i,
                lcomp: random_comp(rng),
                rcomp: random_comp(rng),
                label: Link::ALL[rng.gen_range(0..3)],
            })
            .collect(),
    }
}

/// A model whose counts come from random labelled layers over a random
/// vocabulary, plus a random layer view of length `len` to score.
pub fn random_model_and_views<R: Rng>(
    rng: &mut R,
    len: usize,
    alpha: f64,
) -> (Model, Vec<FeatureView>) {
    let lexicon: Vec<Sentence> = (0..3)
        .map(|_| {
            let t = DepTree::new((0..8).map(|i| if i == 0 { 0 } else { 1 }).collect());
            random_sentence(rng, &t)
        })
        .collect();
    let vocab = build_vocab(&lexicon, rng.gen_range(2..=8));
    let mut model = Model::new(vocab, alpha).unwrap();
    for _ in 0..rng.gen_range(5..40) {
        let n = rng.gen_range(2..=8);
        let enc = random_encoded(rng, &model, n);
        model.observe_layer(&enc, &random_layer(rng, n));
    }
    let enc = random_encoded(rng, &model, len);
    let views = model.feature_views(&enc, &random_layer(rng, len));
    (model, views)
}

pub fn random_encoded<R: Rng>(rng: &mut R, model: &Model, n: usize) -> EncodedSentence {
    let v = model.vocab();
    let words: Vec<u32> = (0..n)
        .map(|_| rng.gen_range(0..v.word_cardinality() as u32))
        .collect();
    let tags = (0..n)
        .map(|_| rng.gen_range(0..v.tag_cardinality() as u32))
        .collect();
    let oov = words.iter().map(|&w| w == v.oov_code()).collect();
    EncodedSentence { words, tags, oov }
}

/// Metric oracle: per-token linear scans over the gold head list.
pub struct BruteScore {
    pub directed: u64,
    pub undirected: u64,
    pub root_correct: bool,
    pub exact: bool,
}

pub fn brute_score(pred: &[usize], gold: &[usize]) -> BruteScore {
    let n = gold.len();
    let mut directed = 0;
    let mut undirected = 0;
    for i in 0..n {
        let tok = i + 1;
        let p = pred[i];
        if p == gold[i] {
            directed += 1;
        }
        let matches_gold_edge = (0..n).any(|j| {
            let (d, h) = (j + 1, gold[j]);
            (d == tok && h == p) || (d == p && h == tok)
        });
        if matches_gold_edge {
            undirected += 1;
        }
    }
    let pred_root = pred.iter().position(|&h| h == 0);
    let gold_root = gold.iter().position(|&h| h == 0);
    BruteScore {
        directed,
        undirected,
        root_correct: pred_root.is_some() && pred_root == gold_root,
        exact: directed as usize == n,
    }
}

/// Gold labels for the current layer under the leaf-and-adjacent rule,
/// recomputed from the tree and the set of tokens already attached.
pub fn gold_labels(tree: &DepTree, layer: &Layer, attached: &HashSet<usize>) -> Vec<Link> {
    let ids: Vec<usize> = layer.tokens.iter().map(|t| t.orig_index).collect();
    ids.iter()
        .enumerate()
        .map(|(i, &tok)| {
            let pending = tree
                .heads()
                .iter()
                .enumerate()
                .any(|(d, &h)| h == tok && !attached.contains(&(d + 1)));
            let head = tree.head(tok);
            if pending {
                Link::None
            } else if i > 0 && ids[i - 1] == head {
                Link::Left
            } else if i + 1 < ids.len() && ids[i + 1] == head {
                Link::Right
            } else {
                Link::None
            }
        })
        .collect()
}
