//! Dependency parsing by recursive chain labelling.
//!
//! Each pass labels every token of the current string `LEFT`, `RIGHT` or
//! `NONE` (depends on its left neighbour, its right neighbour, or is
//! postponed), attaches and removes the linked tokens, and repeats on the
//! shorter string until a single root token remains. Labels are decoded
//! exactly with a constrained Viterbi pass over a count-based chain model.
//!
//! Scoring and inference are generic over the float type ([`Scalar`]); the
//! aliases below fix it to `f64`.

pub mod corpus;
pub mod evaluation;
pub mod inference;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod scalar;
pub mod synthetic;

pub use corpus::{
    build_vocab, filter_short, is_projective, read_corpus, validate_tree, write_corpus, DepTree,
    EncodedSentence, PunctTags, RawToken, Rejection, Sentence, TreeViolation, Vocab,
};
pub use evaluation::{aggregate, baseline_adjacent, baseline_random, score, EvalReport, Tally};
pub use inference::{brute_force, forward_backward, viterbi, SliceScorer};
pub use model::{Feature, FeatureView, Model, PrevLink};
pub use oracle::{apply_labels, derive_layers, replay, CompValue, Layer, LayerToken, Link};
pub use parser::{parse, parse_with, LayerScorer, ParseResult};
pub use scalar::Scalar;
pub use synthetic::ToyGrammar;

pub type Lattice64 = inference::Lattice<f64>;
pub type Lattice32 = inference::Lattice<f32>;
pub type DecodeResult64 = inference::DecodeResult<f64>;
pub type DecodeResult32 = inference::DecodeResult<f32>;
pub type Posterior64 = inference::Posterior<f64>;
pub type Posterior32 = inference::Posterior<f32>;
pub type BruteForce64 = inference::BruteForce<f64>;
