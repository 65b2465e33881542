//! `tkm` — train, inspect and evaluate keyword-score topic models.
//!
//! Exit codes: 0 ok, 2 usage error, 3 input error, 4 model-format error,
//! 5 internal invariant violation, 6 empty corpus.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tkm_core::TkmError;

#[derive(Parser)]
#[command(
    name = "tkm",
    version,
    about = "Keyword-score topic modeling: preprocess, train, infer, prune and evaluate"
)]
struct Cli {
    /// Worker threads (default: TKM_WORKERS env var, else available cores).
    /// Results are identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PreprocessFlags {
    /// Input lines are `label<TAB>text`.
    #[arg(long)]
    labeled: bool,

    /// Stopword list file, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,

    /// Apply the English suffix stemmer.
    #[arg(long)]
    stem: bool,

    /// Keep the original character case.
    #[arg(long)]
    no_lowercase: bool,

    /// Remove words occurring fewer than this many times corpus-wide.
    #[arg(long, default_value_t = 2)]
    min_count: usize,

    /// Drop documents with fewer surviving tokens than this.
    #[arg(long, default_value_t = 1)]
    min_doc_tokens: usize,
}

#[derive(Args, Clone)]
struct HyperFlags {
    /// Upper bound on the number of topics.
    #[arg(long, default_value_t = 100)]
    k: usize,

    /// Topic-concentration exponent.
    #[arg(long, default_value_t = 2.5)]
    alpha: f64,

    /// Word prior (pseudo-count).
    #[arg(long, default_value_t = 0.05)]
    beta: f64,

    /// Concentration weight exponent.
    #[arg(long, default_value_t = 1.5)]
    delta: f64,

    /// Sliding-window half-width in tokens.
    #[arg(long, default_value_t = 7)]
    window: usize,

    /// SKL threshold for pruning redundant topics.
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,

    /// RNG seed; fixed seed gives byte-identical models.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 200)]
    max_sweeps: usize,

    /// Stop when the fraction of tokens changing topic falls below this.
    #[arg(long, default_value_t = 1e-3)]
    assign_tol: f64,

    /// Stop when the max keyword-score change falls below this.
    #[arg(long, default_value_t = 1e-4)]
    score_tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopicsFormat {
    Plain,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Toc,
    Pmi,
    Distinct,
}

#[derive(Subcommand)]
enum Command {
    /// Build an encoded corpus cache from raw text (one document per line).
    Preprocess {
        /// Raw input file.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        prep: PreprocessFlags,
        /// Output corpus cache.
        #[arg(long)]
        out: PathBuf,
    },

    /// Train a model on raw text or a corpus cache.
    Train {
        /// Training corpus: raw text or a `preprocess` cache (auto-detected).
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        prep: PreprocessFlags,
        #[command(flatten)]
        hyper: HyperFlags,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV training log.
        #[arg(long)]
        log: Option<PathBuf>,
    },

    /// Print the top words of each topic.
    Topics {
        #[arg(long)]
        model: PathBuf,
        /// Words per topic.
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, value_enum, default_value_t = TopicsFormat::Plain)]
        format: TopicsFormat,
    },

    /// Infer topic distributions for unseen documents.
    Infer {
        #[arg(long)]
        model: PathBuf,
        /// Documents to infer, one per line (raw text or a corpus cache).
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        prep: PreprocessFlags,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-token topic ids, one `doc_id<TAB>ids` line per doc.
        #[arg(long)]
        token_topics: Option<PathBuf>,
    },

    /// Rewrite a model keeping only its distinct topics.
    Prune {
        #[arg(long)]
        model: PathBuf,
        /// SKL threshold (default: the model's own gamma).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },

    /// Evaluate a model: topic change probability, PMI coherence,
    /// distinct-topic count.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Evaluation corpus (raw text or cache); required for toc.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        prep: PreprocessFlags,
        /// Reference corpus for PMI, one document per line.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Load a prebuilt co-occurrence index instead of --reference.
        #[arg(long)]
        cooc_cache: Option<PathBuf>,
        /// Save the built co-occurrence index for reuse.
        #[arg(long)]
        save_cooc: Option<PathBuf>,
        /// Metrics to compute.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Metric::Toc, Metric::Distinct])]
        metric: Vec<Metric>,
        /// SKL threshold for the distinct metric (default: model gamma).
        #[arg(long)]
        gamma: Option<f64>,
        /// Output CSV report (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Export per-document topic distributions as a feature CSV.
    ExportFeatures {
        #[arg(long)]
        model: PathBuf,
        /// Documents to export (raw text or cache); labels are preserved.
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        prep: PreprocessFlags,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error carrying its process exit code.
pub(crate) struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        CliError {
            code,
            msg: msg.into(),
        }
    }
}

/// Default exit-code mapping; model loading upgrades Format errors to 4.
pub(crate) fn input_err(err: TkmError) -> CliError {
    let code = match &err {
        TkmError::EmptyCorpus => 6,
        TkmError::InvalidHyperparams(_) | TkmError::BetaZero => 2,
        TkmError::Io(_)
        | TkmError::Format { .. }
        | TkmError::EmptyReference
        | TkmError::UnseenWord { .. } => 3,
        TkmError::DistributionInvalid { .. }
        | TkmError::DegenerateTopic { .. }
        | TkmError::TopicInactive { .. }
        | TkmError::DimensionMismatch { .. }
        | TkmError::Internal(_) => 5,
    };
    CliError::new(code, err.to_string())
}

pub(crate) fn model_err(err: TkmError) -> CliError {
    match &err {
        TkmError::Format { .. } => CliError::new(4, err.to_string()),
        _ => input_err(err),
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    if let Some(w) = flag {
        return w.max(1);
    }
    if let Ok(env) = std::env::var("TKM_WORKERS") {
        if let Ok(w) = env.parse::<usize>() {
            return w.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = resolve_workers(cli.workers);
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Preprocess { input, prep, out } => {
            commands::preprocess(&input, &prep, &out, quiet)
        }
        Command::Train {
            corpus,
            prep,
            hyper,
            out,
            log,
        } => commands::train(&corpus, &prep, &hyper, &out, log.as_deref(), workers, quiet),
        Command::Topics { model, top, format } => commands::topics(&model, top, format),
        Command::Infer {
            model,
            input,
            prep,
            out,
            token_topics,
        } => commands::infer(
            &model,
            &input,
            &prep,
            out.as_deref(),
            token_topics.as_deref(),
            quiet,
        ),
        Command::Prune { model, gamma, out } => commands::prune(&model, gamma, &out, quiet),
        Command::Eval {
            model,
            corpus,
            prep,
            reference,
            cooc_cache,
            save_cooc,
            metric,
            gamma,
            out,
        } => commands::eval(
            &model,
            corpus.as_deref(),
            &prep,
            reference.as_deref(),
            cooc_cache.as_deref(),
            save_cooc.as_deref(),
            &metric,
            gamma,
            out.as_deref(),
        ),
        Command::ExportFeatures {
            model,
            corpus,
            prep,
            out,
        } => commands::export_features(&model, &corpus, &prep, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.msg);
            ExitCode::from(err.code)
        }
    }
}
