use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use linkchain::evaluation::ProjectiveSampler;
use linkchain::oracle::write_layers;
use linkchain::parser::trace_marginals;
use linkchain::{
    aggregate, baseline_adjacent, build_vocab, derive_layers, filter_short, parse, read_corpus,
    score, write_corpus, DepTree, Feature, Model, PunctTags, Rejection, Sentence, Tally,
    ToyGrammar,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Baseline, Command, CorpusOpts, ModelOpts};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            treebank,
            model,
            split,
            seed,
            model_opts,
            corpus,
        } => train(&treebank, &model, split, seed, &model_opts, &corpus),
        Command::Parse {
            model,
            input,
            trace,
            marginals,
        } => parse_cmd(&model, &input, trace.as_deref(), marginals.as_deref()),
        Command::Eval {
            gold,
            model,
            pred,
            baseline,
            samples,
            seed,
            corpus,
        } => eval(
            &gold,
            model.as_deref(),
            pred.as_deref(),
            baseline,
            samples,
            seed,
            &corpus,
        ),
        Command::Layers { treebank, corpus } => layers(&treebank, &corpus),
        Command::Generate {
            seed,
            count,
            max_len,
        } => generate(seed, count, max_len as usize),
        Command::Stats { treebank, corpus } => stats(&treebank, &corpus),
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn read_treebank(path: &Path) -> Result<Vec<Sentence>> {
    read_corpus(open(path)?).with_context(|| format!("cannot read {}", path.display()))
}

impl CorpusOpts {
    fn punct(&self) -> PunctTags {
        match &self.punct_tags {
            None => PunctTags::default(),
            Some(list) => PunctTags::new(list.split(',').map(str::trim).filter(|t| !t.is_empty())),
        }
    }
}

/// Usable sentences after filtering, plus the rejections in input order.
fn filter_all(corpus: &[Sentence], opts: &CorpusOpts) -> (Vec<Sentence>, Vec<(usize, Rejection)>) {
    let punct = opts.punct();
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (i, s) in corpus.iter().enumerate() {
        match filter_short(s, &punct, opts.max_len as usize) {
            Ok(f) => kept.push(f),
            Err(r) => rejected.push((i + 1, r)),
        }
    }
    (kept, rejected)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn train(
    treebank: &Path,
    model_path: &Path,
    split: Option<f64>,
    seed: u64,
    opts: &ModelOpts,
    corpus_opts: &CorpusOpts,
) -> Result<()> {
    let corpus = read_treebank(treebank)?;
    let (mut usable, rejected) = filter_all(&corpus, corpus_opts);
    ensure!(
        !usable.is_empty(),
        "zero usable sentences in {}",
        treebank.display()
    );

    if let Some(fraction) = split {
        usable.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((usable.len() as f64 * fraction).round() as usize).clamp(1, usable.len());
        let (train, test) = usable.split_at(cut);
        for (part, name) in [(train, ".train.tsv"), (test, ".test.tsv")] {
            let path = suffixed(model_path, name);
            let mut w = create(&path)?;
            write_corpus(&mut w, part)?;
            w.flush()?;
            eprintln!("wrote {} sentences to {}", part.len(), path.display());
        }
        usable.truncate(cut);
    }

    let vocab = build_vocab(&usable, opts.vocab_size as usize);
    let encoded: Vec<_> = usable.iter().map(|s| vocab.encode(s)).collect();
    let layers = usable
        .iter()
        .map(|s| derive_layers(&s.tree()))
        .collect::<Result<Vec<_>, _>>()?;
    let model = Model::train(
        vocab,
        opts.alpha,
        encoded.iter().zip(layers.iter().map(Vec::as_slice)),
    )?;

    let mut w = create(model_path)?;
    model.save(&mut w)?;
    w.flush()?;

    let layer_count: usize = layers.iter().map(|l| l.len() - 1).sum();
    let emission_entries: usize = Feature::ALL
        .iter()
        .map(|&f| model.emission(f).nonzero().count())
        .sum();
    eprintln!(
        "trained on {} sentences ({} rejected), {} layers, {} words, {} tags, \
         {} transition entries, {} emission entries",
        usable.len(),
        rejected.len(),
        layer_count,
        model.vocab().num_words(),
        model.vocab().num_tags(),
        model.transitions().nonzero().count(),
        emission_entries,
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<Model> {
    Model::load(open(path)?).with_context(|| format!("cannot load model {}", path.display()))
}

fn parse_cmd(
    model_path: &Path,
    input: &Path,
    trace: Option<&Path>,
    marginals: Option<&Path>,
) -> Result<()> {
    let model = load_model(model_path)?;
    let corpus = read_treebank(input)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut trace = trace.map(create).transpose()?;
    let mut marginals = marginals.map(create).transpose()?;
    if let Some(w) = &mut marginals {
        writeln!(w, "sentence\tpass\tposition\ttoken\tLEFT\tRIGHT\tNONE")?;
    }
    let mut fallbacks = 0;
    for (i, s) in corpus.iter().enumerate() {
        let enc = model.vocab().encode(s);
        let result = parse(&model, &enc);
        fallbacks += result.fallback_count;
        let predicted = s.with_tree(&result.tree);
        linkchain::corpus::write_sentence(&mut out, &predicted)?;
        if let Some(w) = &mut trace {
            write_layers(w, i + 1, s, &result.layers)?;
        }
        if let Some(w) = &mut marginals {
            let passes = trace_marginals::<f64, _>(&model, &enc, &result);
            for (k, (layer, post)) in result.layers.iter().zip(passes).enumerate() {
                match post {
                    Ok(p) => {
                        for (t, (tok, m)) in layer.tokens.iter().zip(&p.marginals).enumerate() {
                            writeln!(
                                w,
                                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                                i + 1,
                                k + 1,
                                t + 1,
                                tok.orig_index,
                                m[0],
                                m[1],
                                m[2]
                            )?;
                        }
                    }
                    Err(e) => writeln!(w, "{}\t{}\t# {e}", i + 1, k + 1)?,
                }
            }
        }
    }
    out.flush()?;
    for w in [trace, marginals].into_iter().flatten() {
        w.into_inner().map_err(|e| e.into_error())?;
    }
    eprintln!(
        "parsed {} sentences ({fallbacks} fallback passes)",
        corpus.len()
    );
    Ok(())
}

fn eval(
    gold_path: &Path,
    model_path: Option<&Path>,
    pred_path: Option<&Path>,
    baseline: Option<Baseline>,
    samples: u32,
    seed: u64,
    opts: &CorpusOpts,
) -> Result<()> {
    let model = model_path.map(load_model).transpose()?;
    let gold_raw = read_treebank(gold_path)?;
    let pred_raw = pred_path.map(read_treebank).transpose()?;
    if let Some(pred) = &pred_raw {
        ensure!(
            pred.len() == gold_raw.len(),
            "prediction file has {} sentences, gold has {}",
            pred.len(),
            gold_raw.len()
        );
    }

    let punct = opts.punct();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: Vec<Tally> = Vec::new();
    let mut rejected = 0;
    for (i, raw) in gold_raw.iter().enumerate() {
        let gold = match filter_short(raw, &punct, opts.max_len as usize) {
            Ok(s) => s,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let gold_tree = gold.tree();
        let oov: Vec<bool> = match &model {
            Some(m) => m.vocab().encode(&gold).oov,
            None => vec![false; gold.len()],
        };
        let n = gold.len();
        let preds: Vec<DepTree> = match (&pred_raw, baseline) {
            (Some(pred), _) => {
                vec![
                    filtered_prediction(raw, &pred[i], &punct, opts.max_len as usize)
                        .with_context(|| format!("prediction for sentence {}", i + 1))?,
                ]
            }
            (None, Some(Baseline::Adjacent)) => vec![baseline_adjacent(n)],
            (None, Some(Baseline::Random)) => {
                let sampler = ProjectiveSampler::new(n);
                (0..samples).map(|_| sampler.sample(&mut rng)).collect()
            }
            (None, None) => {
                let m = model.as_ref().expect("model checked above");
                vec![parse(m, &m.vocab().encode(&gold)).tree]
            }
        };
        for p in &preds {
            tallies.push(score(p, &gold_tree, &oov)?);
        }
    }
    let report = aggregate(tallies).context("no usable gold sentences")?;
    let mut out = io::stdout().lock();
    report.write_table(&mut out)?;
    out.flush()?;
    if rejected > 0 {
        eprintln!("skipped {rejected} gold sentences rejected by the filter");
    }
    if baseline == Some(Baseline::Random) {
        eprintln!("random baseline: {samples} samples per sentence, counts summed over samples");
    }
    if model.is_none() {
        eprintln!("no model given: every token counts as in-vocabulary");
    }
    Ok(())
}

/// Applies the gold sentence's punctuation removal to a predicted tree.
fn filtered_prediction(
    gold: &Sentence,
    pred: &Sentence,
    punct: &PunctTags,
    max_len: usize,
) -> Result<DepTree> {
    ensure!(
        pred.len() == gold.len(),
        "{} tokens, gold has {}",
        pred.len(),
        gold.len()
    );
    let mut aligned = pred.clone();
    for (p, g) in aligned.tokens.iter_mut().zip(&gold.tokens) {
        p.pos = g.pos.clone();
    }
    let filtered = filter_short(&aligned, punct, max_len).map_err(|r| anyhow::anyhow!("{r}"))?;
    Ok(filtered.tree())
}

fn layers(treebank: &Path, opts: &CorpusOpts) -> Result<()> {
    let corpus = read_treebank(treebank)?;
    let (usable, rejected) = filter_all(&corpus, opts);
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, s) in usable.iter().enumerate() {
        let layers = derive_layers(&s.tree())?;
        write_layers(&mut out, i + 1, s, &layers)?;
    }
    out.flush()?;
    eprintln!("{} sentences ({} rejected)", usable.len(), rejected.len());
    Ok(())
}

fn generate(seed: u64, count: usize, max_len: usize) -> Result<()> {
    let grammar = ToyGrammar {
        max_len,
        ..ToyGrammar::default()
    };
    let data = grammar.generate(seed, count);
    let mut out = BufWriter::new(io::stdout().lock());
    write_corpus(&mut out, data.iter().map(|(s, _)| s))?;
    out.flush()?;
    eprintln!("generated {count} sentences with seed {seed}");
    Ok(())
}

fn stats(treebank: &Path, opts: &CorpusOpts) -> Result<()> {
    let corpus = read_treebank(treebank)?;
    let (usable, rejected) = filter_all(&corpus, opts);
    let mut reasons: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (_, r) in &rejected {
        let key = match r {
            Rejection::Empty => "empty",
            Rejection::TooLong { .. } => "too-long",
            Rejection::InvalidTree(v) => v.kind(),
        };
        *reasons.entry(key).or_default() += 1;
    }
    let tokens: usize = corpus.iter().map(Sentence::len).sum();
    let usable_tokens: usize = usable.iter().map(Sentence::len).sum();
    let vocab = build_vocab(&usable, usize::MAX);
    let mut out = io::stdout().lock();
    writeln!(out, "sentences\t{}", corpus.len())?;
    writeln!(out, "tokens\t{tokens}")?;
    writeln!(out, "usable\t{}", usable.len())?;
    writeln!(out, "usable-tokens\t{usable_tokens}")?;
    writeln!(out, "rejected\t{}", rejected.len())?;
    for (reason, n) in &reasons {
        writeln!(out, "rejected-{reason}\t{n}")?;
    }
    writeln!(out, "word-types\t{}", vocab.num_words())?;
    writeln!(out, "tags\t{}", vocab.num_tags())?;
    out.flush()?;
    Ok(())
}
