use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::Sentence;

/// Placeholder string written for the out-of-vocabulary entry of a dump.
pub const OOV_STRING: &str = "<OOV>";
/// Placeholder string written for the unknown-tag entry of a dump.
pub const UNKNOWN_TAG_STRING: &str = "<UNK-TAG>";

#[derive(Clone, Debug, Default)]
struct FreqTable {
    // form -> (count, first occurrence)
    entries: HashMap<String, (u64, u64)>,
    seen: u64,
}

impl FreqTable {
    fn add(&mut self, s: &str) {
        let seen = self.seen;
        self.entries.entry(s.to_owned()).or_insert((0, seen)).0 += 1;
        self.seen += 1;
    }

    /// `other` is treated as occurring after everything in `self`.
    fn merge(&mut self, other: FreqTable) {
        let offset = self.seen;
        for (s, (count, first)) in other.entries {
            let e = self.entries.entry(s).or_insert((0, first + offset));
            e.0 += count;
        }
        self.seen += other.seen;
    }

    /// Entries sorted by descending count, ties by first occurrence.
    fn ranked(self) -> Vec<(String, u64)> {
        let mut v: Vec<(String, u64, u64)> = self
            .entries
            .into_iter()
            .map(|(s, (c, f))| (s, c, f))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        v.into_iter().map(|(s, c, _)| (s, c)).collect()
    }
}

/// Mergeable frequency accumulator for word forms and tags.
#[derive(Clone, Debug, Default)]
pub struct VocabBuilder {
    words: FreqTable,
    tags: FreqTable,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sentence(&mut self, sentence: &Sentence) {
        for t in &sentence.tokens {
            self.words.add(&t.form);
            self.tags.add(&t.pos);
        }
    }

    /// Combines two partial counts; `other`'s tokens are ordered after `self`'s.
    pub fn merge(&mut self, other: VocabBuilder) {
        self.words.merge(other.words);
        self.tags.merge(other.tags);
    }

    /// Keeps the `limit` most frequent forms; every observed tag is kept.
    pub fn build(self, limit: usize) -> Vocab {
        assert!(limit >= 1, "vocabulary size must be at least 1");
        let ranked = self.words.ranked();
        let split = ranked.len().min(limit);
        let oov_freq = ranked[split..].iter().map(|(_, c)| c).sum();
        let mut kept = ranked;
        kept.truncate(split);
        let tags = self.tags.ranked();
        Vocab::from_tables(limit, kept, oov_freq, tags, 0)
    }
}

/// Word and tag code tables.
///
/// In-vocabulary words take codes `0..k`; the OOV code is `k`. Tags are coded
/// the same way, with an extra code for tags unseen while building.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    limit: usize,
    words: Vec<(String, u64)>,
    oov_freq: u64,
    word_index: HashMap<String, u32>,
    tags: Vec<(String, u64)>,
    unknown_tag_freq: u64,
    tag_index: HashMap<String, u32>,
}

/// Token codes of one sentence under a [`Vocab`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSentence {
    pub words: Vec<u32>,
    pub tags: Vec<u32>,
    pub oov: Vec<bool>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn build_vocab<'a>(corpus: impl IntoIterator<Item = &'a Sentence>, limit: usize) -> Vocab {
    let mut b = VocabBuilder::new();
    for s in corpus {
        b.add_sentence(s);
    }
    b.build(limit)
}

impl Vocab {
    fn from_tables(
        limit: usize,
        words: Vec<(String, u64)>,
        oov_freq: u64,
        tags: Vec<(String, u64)>,
        unknown_tag_freq: u64,
    ) -> Self {
        let word_index = words
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i as u32))
            .collect();
        let tag_index = tags
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i as u32))
            .collect();
        Vocab {
            limit,
            words,
            oov_freq,
            word_index,
            tags,
            unknown_tag_freq,
            tag_index,
        }
    }

    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a Sentence>, limit: usize) -> Vocab {
        build_vocab(corpus, limit)
    }

    /// Configured maximum number of in-vocabulary forms.
    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn oov_code(&self) -> u32 {
        self.words.len() as u32
    }

    pub fn unknown_tag_code(&self) -> u32 {
        self.tags.len() as u32
    }

    /// Number of distinct word codes, OOV included.
    pub fn word_cardinality(&self) -> usize {
        self.words.len() + 1
    }

    /// Number of distinct tag codes, unknown tag included.
    pub fn tag_cardinality(&self) -> usize {
        self.tags.len() + 1
    }

    pub fn word_code(&self, form: &str) -> u32 {
        self.word_index
            .get(form)
            .copied()
            .unwrap_or_else(|| self.oov_code())
    }

    pub fn tag_code(&self, tag: &str) -> u32 {
        self.tag_index
            .get(tag)
            .copied()
            .unwrap_or_else(|| self.unknown_tag_code())
    }

    pub fn word(&self, code: u32) -> Option<&str> {
        self.words.get(code as usize).map(|(s, _)| s.as_str())
    }

    pub fn tag(&self, code: u32) -> Option<&str> {
        self.tags.get(code as usize).map(|(s, _)| s.as_str())
    }

    pub fn word_frequency(&self, code: u32) -> u64 {
        match self.words.get(code as usize) {
            Some((_, f)) => *f,
            None if code == self.oov_code() => self.oov_freq,
            None => 0,
        }
    }

    pub fn is_oov(&self, form: &str) -> bool {
        !self.word_index.contains_key(form)
    }

    pub fn encode(&self, sentence: &Sentence) -> EncodedSentence {
        let words: Vec<u32> = sentence
            .tokens
            .iter()
            .map(|t| self.word_code(&t.form))
            .collect();
        let oov = words.iter().map(|&w| w == self.oov_code()).collect();
        let tags = sentence
            .tokens
            .iter()
            .map(|t| self.tag_code(&t.pos))
            .collect();
        EncodedSentence { words, tags, oov }
    }

    /// Writes the vocabulary as two sections of `code<TAB>string<TAB>frequency`
    /// lines. The last entry of each section is the OOV / unknown-tag slot.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "[words] limit={} entries={}",
            self.limit,
            self.words.len() + 1
        )?;
        for (code, (s, f)) in self.words.iter().enumerate() {
            writeln!(w, "{code}\t{s}\t{f}")?;
        }
        writeln!(w, "{}\t{OOV_STRING}\t{}", self.oov_code(), self.oov_freq)?;
        writeln!(w, "[tags] entries={}", self.tags.len() + 1)?;
        for (code, (s, f)) in self.tags.iter().enumerate() {
            writeln!(w, "{code}\t{s}\t{f}")?;
        }
        writeln!(
            w,
            "{}\t{UNKNOWN_TAG_STRING}\t{}",
            self.unknown_tag_code(),
            self.unknown_tag_freq
        )
    }

    /// Reads what [`Vocab::write_dump`] wrote. `line` tracks the 1-based
    /// position in the enclosing file for error messages.
    pub fn read_dump<I>(lines: &mut I, line: &mut usize) -> Result<Vocab, VocabError>
    where
        I: Iterator<Item = io::Result<String>>,
    {
        let header = next_line(lines, line)?;
        let rest = header
            .strip_prefix("[words] ")
            .ok_or_else(|| VocabError::at(*line, "expected [words] section"))?;
        let (limit, entries) = parse_words_header(rest)
            .ok_or_else(|| VocabError::at(*line, format!("malformed words header '{header}'")))?;
        let (words, oov_freq) = read_entries(lines, line, entries)?;

        let header = next_line(lines, line)?;
        let entries = header
            .strip_prefix("[tags] entries=")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| VocabError::at(*line, format!("malformed tags header '{header}'")))?;
        let (tags, unknown_tag_freq) = read_entries(lines, line, entries)?;

        Ok(Vocab::from_tables(
            limit,
            words,
            oov_freq,
            tags,
            unknown_tag_freq,
        ))
    }
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unexpected end of input after line {0}")]
    Truncated(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl VocabError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        VocabError::Format {
            line,
            message: message.into(),
        }
    }
}

fn next_line<I>(lines: &mut I, line: &mut usize) -> Result<String, VocabError>
where
    I: Iterator<Item = io::Result<String>>,
{
    match lines.next() {
        Some(l) => {
            *line += 1;
            Ok(l?)
        }
        None => Err(VocabError::Truncated(*line)),
    }
}

fn parse_words_header(rest: &str) -> Option<(usize, usize)> {
    let mut limit = None;
    let mut entries = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("limit=") {
            limit = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("entries=") {
            entries = v.parse().ok();
        }
    }
    Some((limit?, entries?))
}

/// Reads `entries` lines; the last is the reserved slot and only its
/// frequency is kept.
fn read_entries<I>(
    lines: &mut I,
    line: &mut usize,
    entries: usize,
) -> Result<(Vec<(String, u64)>, u64), VocabError>
where
    I: Iterator<Item = io::Result<String>>,
{
    if entries == 0 {
        return Err(VocabError::at(
            *line,
            "section must contain the reserved entry",
        ));
    }
    let mut out = Vec::with_capacity(entries - 1);
    for expected in 0..entries {
        let l = next_line(lines, line)?;
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 3 {
            return Err(VocabError::at(
                *line,
                "expected code<TAB>string<TAB>frequency",
            ));
        }
        let code: usize = cols[0]
            .parse()
            .map_err(|_| VocabError::at(*line, "invalid code"))?;
        if code != expected {
            return Err(VocabError::at(
                *line,
                format!("expected code {expected}, found {code}"),
            ));
        }
        let freq: u64 = cols[2]
            .parse()
            .map_err(|_| VocabError::at(*line, "invalid frequency"))?;
        if expected + 1 == entries {
            return Ok((out, freq));
        }
        out.push((cols[1].to_owned(), freq));
    }
    unreachable!("loop returns on the reserved entry")
}

/// Reads a standalone vocabulary dump.
pub fn read_vocab<R: BufRead>(reader: R) -> Result<Vocab, VocabError> {
    let mut lines = reader.lines();
    let mut line = 0;
    Vocab::read_dump(&mut lines, &mut line)
}
