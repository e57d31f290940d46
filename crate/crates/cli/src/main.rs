mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "linkchain",
    version,
    about = "Dependency parsing by recursive chain labelling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model from a 4-column treebank.
    Train {
        /// Treebank file, or `-` for standard input.
        treebank: PathBuf,
        /// Where to write the model.
        #[arg(short, long)]
        model: PathBuf,
        /// Shuffle the usable sentences and train on this fraction only,
        /// writing `<model>.train.tsv` and `<model>.test.tsv`.
        #[arg(long, value_parser = parse_fraction)]
        split: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model_opts: ModelOpts,
        #[command(flatten)]
        corpus: CorpusOpts,
    },
    /// Parse sentences and print the predicted treebank.
    Parse {
        #[arg(short, long)]
        model: PathBuf,
        /// Input in the 4-column format; the head column is ignored.
        input: PathBuf,
        /// Write the predicted layers of every sentence to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write per-position posterior marginals of every pass to this file.
        #[arg(long)]
        marginals: Option<PathBuf>,
    },
    /// Score predictions against a gold treebank.
    #[command(group(ArgGroup::new("source").required(true).multiple(true).args(["model", "pred", "baseline"])))]
    Eval {
        /// Gold treebank.
        gold: PathBuf,
        /// Model used to parse the gold sentences and to mark OOV tokens.
        #[arg(short, long)]
        model: Option<PathBuf>,
        /// Score an existing prediction file instead of parsing.
        #[arg(long, conflicts_with = "baseline")]
        pred: Option<PathBuf>,
        /// Score a baseline instead of the model.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Random-baseline draws per sentence.
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        corpus: CorpusOpts,
    },
    /// Print the gold layer decomposition of every sentence.
    Layers {
        treebank: PathBuf,
        #[command(flatten)]
        corpus: CorpusOpts,
    },
    /// Print a synthetic treebank drawn from the toy grammar.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        max_len: u64,
    },
    /// Corpus statistics and rejection counts.
    Stats {
        treebank: PathBuf,
        #[command(flatten)]
        corpus: CorpusOpts,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ModelOpts {
    /// Number of word forms kept; the rest map to the OOV code.
    #[arg(long, default_value_t = 2500, value_parser = clap::value_parser!(u64).range(1..))]
    pub vocab_size: u64,
    /// Additive smoothing constant; 0 disables smoothing.
    #[arg(long, default_value_t = 0.1, value_parser = parse_alpha, allow_negative_numbers = true)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone)]
pub struct CorpusOpts {
    /// Sentences longer than this after punctuation removal are dropped.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_len: u64,
    /// Comma-separated punctuation tags to remove; empty keeps everything.
    /// Defaults to the Penn Treebank punctuation tags.
    #[arg(long)]
    pub punct_tags: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Adjacent,
    Random,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a.is_finite() && a >= 0.0 {
        Ok(a)
    } else {
        Err("must be a finite number >= 0".into())
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
