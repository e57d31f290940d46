//! Toy dependency grammar for self-contained end-to-end runs.
//!
//! ```text
//! S  -> NP VERB (NP) (ADV)
//! NP -> (DET) NOUN (PP)
//! PP -> PREP NP
//! ```
//!
//! Determiners attach to their noun, a PP's preposition to the noun it
//! follows, the PP's noun to the preposition, subject and object nouns and
//! adverbs to the verb, and the verb to ROOT.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DepTree, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordClass {
    Det,
    Noun,
    Prep,
    Verb,
    Adv,
}

impl WordClass {
    pub fn tag(self) -> &'static str {
        match self {
            WordClass::Det => "DT",
            WordClass::Noun => "NN",
            WordClass::Prep => "IN",
            WordClass::Verb => "VBD",
            WordClass::Adv => "RB",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ToyGrammar {
    pub determiners: Vec<String>,
    pub nouns: Vec<String>,
    pub prepositions: Vec<String>,
    pub verbs: Vec<String>,
    pub adverbs: Vec<String>,
    pub p_determiner: f64,
    pub p_pp: f64,
    pub p_object: f64,
    pub p_adverb: f64,
    /// Maximum number of nested PPs below one NP.
    pub max_pp_depth: usize,
    pub max_len: usize,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| (*w).to_owned()).collect()
}

impl Default for ToyGrammar {
    fn default() -> Self {
        ToyGrammar {
            determiners: words(&["the", "a", "some", "every"]),
            nouns: words(&[
                "king",
                "camel",
                "country",
                "trunk",
                "telescope",
                "hump",
                "prussia",
                "merchant",
                "city",
                "garden",
                "horse",
                "letter",
            ]),
            prepositions: words(&["of", "in", "with", "from"]),
            verbs: words(&[
                "bought", "saw", "put", "sold", "found", "liked", "sent", "wanted",
            ]),
            adverbs: words(&["today", "quickly", "again", "yesterday", "twice"]),
            p_determiner: 0.75,
            p_pp: 0.35,
            p_object: 0.7,
            p_adverb: 0.3,
            max_pp_depth: 2,
            max_len: 10,
        }
    }
}

struct Draft {
    class: WordClass,
    form: String,
    // 0-based index of the head, None for ROOT
    head: Option<usize>,
}

impl ToyGrammar {
    /// `count` sentences with their gold trees, deterministic in `seed`.
    pub fn generate(&self, seed: u64, count: usize) -> Vec<(Sentence, DepTree)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sentence(&mut rng)).collect()
    }

    /// Draws sentences until one fits within `max_len`.
    pub fn sentence<R: Rng + ?Sized>(&self, rng: &mut R) -> (Sentence, DepTree) {
        loop {
            let mut toks = Vec::new();
            let subject = self.noun_phrase(rng, &mut toks, 0);
            let verb = self.push(rng, &mut toks, WordClass::Verb, None);
            toks[subject].head = Some(verb);
            if rng.gen_bool(self.p_object) {
                let object = self.noun_phrase(rng, &mut toks, 0);
                toks[object].head = Some(verb);
            }
            if rng.gen_bool(self.p_adverb) {
                self.push(rng, &mut toks, WordClass::Adv, Some(verb));
            }
            if toks.len() <= self.max_len {
                return finish(toks);
            }
        }
    }

    fn noun_phrase<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        toks: &mut Vec<Draft>,
        depth: usize,
    ) -> usize {
        let det = rng
            .gen_bool(self.p_determiner)
            .then(|| self.push(rng, toks, WordClass::Det, None));
        let noun = self.push(rng, toks, WordClass::Noun, None);
        if let Some(d) = det {
            toks[d].head = Some(noun);
        }
        if depth < self.max_pp_depth && rng.gen_bool(self.p_pp) {
            let prep = self.push(rng, toks, WordClass::Prep, Some(noun));
            let inner = self.noun_phrase(rng, toks, depth + 1);
            toks[inner].head = Some(prep);
        }
        noun
    }

    fn push<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        toks: &mut Vec<Draft>,
        class: WordClass,
        head: Option<usize>,
    ) -> usize {
        let lex = match class {
            WordClass::Det => &self.determiners,
            WordClass::Noun => &self.nouns,
            WordClass::Prep => &self.prepositions,
            WordClass::Verb => &self.verbs,
            WordClass::Adv => &self.adverbs,
        };
        let form = lex[rng.gen_range(0..lex.len())].clone();
        toks.push(Draft { class, form, head });
        toks.len() - 1
    }
}

fn finish(toks: Vec<Draft>) -> (Sentence, DepTree) {
    let heads: Vec<usize> = toks.iter().map(|t| t.head.map_or(0, |h| h + 1)).collect();
    let sentence = Sentence::from_parts(
        toks.into_iter()
            .zip(&heads)
            .map(|(t, &h)| (t.form, t.class.tag(), h)),
    );
    (sentence, DepTree::new(heads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{filter_short, validate_tree, PunctTags};

    #[test]
    fn generated_trees_are_valid_and_short() {
        let g = ToyGrammar::default();
        for (s, t) in g.generate(42, 2000) {
            assert!(s.len() <= 10);
            assert_eq!(validate_tree(t.heads()), Ok(()));
            assert_eq!(s.tree(), t);
            assert_eq!(filter_short(&s, &PunctTags::default(), 10), Ok(s.clone()));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let g = ToyGrammar::default();
        let a: Vec<_> = g.generate(5, 50);
        let b: Vec<_> = g.generate(5, 50);
        assert_eq!(a, b);
        assert_ne!(a, g.generate(6, 50));
    }

    #[test]
    fn expected_shapes_occur() {
        let g = ToyGrammar::default();
        let corpus = g.generate(42, 2000);
        let shape = |tags: &[&str], heads: &[usize]| {
            corpus.iter().any(|(s, t)| {
                t.heads() == heads
                    && s.tokens
                        .iter()
                        .map(|x| x.pos.as_str())
                        .eq(tags.iter().copied())
            })
        };
        assert!(shape(&["DT", "NN", "VBD", "DT", "NN"], &[2, 3, 0, 5, 3]));
        assert!(shape(
            &["DT", "NN", "IN", "NN", "VBD", "DT", "NN"],
            &[2, 5, 2, 3, 0, 7, 5]
        ));
    }
}
