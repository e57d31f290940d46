//! Treebank input and output, tree validation, sentence filtering and
//! vocabularies.
//!
//! Treebanks are UTF-8 text with one token per line and four tab-separated
//! columns `INDEX FORM POS HEAD`. Sentences are separated by a blank line.
//! `HEAD` is the 1-based index of the governing token, `0` for ROOT.

mod tree;
mod vocab;

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use thiserror::Error;

pub use tree::{is_projective, validate_tree, DepTree, TreeViolation};
pub use vocab::{build_vocab, read_vocab, EncodedSentence, Vocab, VocabBuilder, VocabError};

/// The Penn Treebank punctuation tags, with both spellings of brackets.
pub const PTB_PUNCT_TAGS: &[&str] = &[
    "``", "''", ",", ".", ":", "-LRB-", "-RRB-", "(", ")", "#", "$",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawToken {
    pub index: usize,
    pub form: String,
    pub pos: String,
    pub head: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<RawToken>,
}

impl Sentence {
    /// Builds a sentence from `(form, pos, head)` triples.
    pub fn from_parts<S: Into<String>, T: Into<String>>(
        parts: impl IntoIterator<Item = (S, T, usize)>,
    ) -> Self {
        let tokens = parts
            .into_iter()
            .enumerate()
            .map(|(i, (form, pos, head))| RawToken {
                index: i + 1,
                form: form.into(),
                pos: pos.into(),
                head,
            })
            .collect();
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The gold tree stored in the head column.
    pub fn tree(&self) -> DepTree {
        DepTree::new(self.tokens.iter().map(|t| t.head).collect())
    }

    /// Replaces the head column.
    pub fn with_tree(&self, tree: &DepTree) -> Sentence {
        assert_eq!(tree.len(), self.len(), "tree length must match sentence");
        let tokens = self
            .tokens
            .iter()
            .zip(tree.heads())
            .map(|(t, &head)| RawToken { head, ..t.clone() })
            .collect();
        Sentence { tokens }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads every sentence of a treebank stream.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_err(
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let index: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid token index '{}'", cols[0])))?;
        let head: usize = cols[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid head '{}'", cols[3])))?;
        if index != current.len() + 1 {
            return Err(parse_err(
                lineno,
                format!("expected token index {}, found {index}", current.len() + 1),
            ));
        }
        current.tokens.push(RawToken {
            index,
            form: cols[1].to_owned(),
            pos: cols[2].to_owned(),
            head,
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }

    Ok(sentences)
}

/// Writes one sentence in treebank format, followed by a blank line.
pub fn write_sentence<W: Write>(writer: &mut W, sentence: &Sentence) -> io::Result<()> {
    for t in &sentence.tokens {
        writeln!(writer, "{}\t{}\t{}\t{}", t.index, t.form, t.pos, t.head)?;
    }
    writeln!(writer)
}

pub fn write_corpus<'a, W: Write>(
    writer: &mut W,
    sentences: impl IntoIterator<Item = &'a Sentence>,
) -> io::Result<()> {
    for s in sentences {
        write_sentence(writer, s)?;
    }
    Ok(())
}

/// Configured set of punctuation tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PunctTags(HashSet<String>);

impl PunctTags {
    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Self {
        PunctTags(tags.into_iter().map(Into::into).collect())
    }

    pub fn none() -> Self {
        PunctTags(HashSet::new())
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }
}

impl Default for PunctTags {
    fn default() -> Self {
        PunctTags::new(PTB_PUNCT_TAGS.iter().copied())
    }
}

/// Why [`filter_short`] dropped a sentence.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("sentence has no tokens after punctuation removal")]
    Empty,
    #[error("sentence has {len} tokens, limit is {max}")]
    TooLong { len: usize, max: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(TreeViolation),
}

/// Removes punctuation tokens and rejects sentences that are too long or
/// whose tree is not a valid projective dependency tree.
///
/// A token headed by a removed token takes that token's head, following
/// chains of punctuation.
pub fn filter_short(
    sentence: &Sentence,
    punct: &PunctTags,
    max_len: usize,
) -> Result<Sentence, Rejection> {
    let n = sentence.len();
    let removed: Vec<bool> = sentence
        .tokens
        .iter()
        .map(|t| punct.contains(&t.pos))
        .collect();

    // old 1-based position -> new 1-based position (0 stays ROOT)
    let mut new_pos = vec![0usize; n + 1];
    let mut next = 0;
    for (i, &r) in removed.iter().enumerate() {
        if !r {
            next += 1;
            new_pos[i + 1] = next;
        }
    }
    let kept = next;
    if kept == 0 {
        return Err(Rejection::Empty);
    }
    if kept > max_len {
        return Err(Rejection::TooLong {
            len: kept,
            max: max_len,
        });
    }

    let mut tokens = Vec::with_capacity(kept);
    for (i, tok) in sentence.tokens.iter().enumerate() {
        if removed[i] {
            continue;
        }
        let mut head = tok.head;
        let mut steps = 0;
        while head != 0 && head <= n && removed[head - 1] {
            head = sentence.tokens[head - 1].head;
            steps += 1;
            if steps > n {
                return Err(Rejection::InvalidTree(TreeViolation::Cycle {
                    token: i + 1,
                }));
            }
        }
        if head > n {
            return Err(Rejection::InvalidTree(TreeViolation::HeadOutOfRange {
                token: i + 1,
                head,
            }));
        }
        tokens.push(RawToken {
            index: new_pos[i + 1],
            form: tok.form.clone(),
            pos: tok.pos.clone(),
            head: new_pos[head],
        });
    }

    let filtered = Sentence { tokens };
    validate_tree(filtered.tree().heads()).map_err(Rejection::InvalidTree)?;
    Ok(filtered)
}
