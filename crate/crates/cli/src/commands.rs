use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tkm_core::corpus::{load_corpus, read_raw_documents, read_stopwords, save_corpus};
use tkm_core::metrics::CooccurrenceIndex;
use tkm_core::textio::{csv_field, fmt_f64};
use tkm_core::{
    build_cooc_index, build_corpus, distinct_topics, encode_document, model_pmi, Corpus,
    Hyperparams, PreprocessOptions, StemmerKind, TkmError, TrainedModel,
};

use crate::{input_err, model_err, CliError, HyperFlags, Metric, PreprocessFlags, TopicsFormat};

type CliResult = Result<(), CliError>;

fn prep_options(flags: &PreprocessFlags) -> Result<PreprocessOptions, CliError> {
    let stopwords = match &flags.stopwords {
        Some(path) => {
            let file = File::open(path).map_err(|e| from_io(path, e))?;
            Some(read_stopwords(BufReader::new(file)).map_err(input_err)?)
        }
        None => None,
    };
    Ok(PreprocessOptions {
        lowercase: !flags.no_lowercase,
        stopwords,
        stemmer: if flags.stem {
            StemmerKind::English
        } else {
            StemmerKind::None
        },
        min_global_count: flags.min_count,
        min_doc_tokens: flags.min_doc_tokens,
    })
}

fn hyperparams(flags: &HyperFlags) -> Hyperparams {
    Hyperparams {
        k: flags.k,
        alpha: flags.alpha,
        beta: flags.beta,
        delta: flags.delta,
        window: flags.window,
        gamma: flags.gamma,
        seed: flags.seed,
        max_sweeps: flags.max_sweeps,
        assign_change_tol: flags.assign_tol,
        score_change_tol: flags.score_tol,
    }
}

fn from_io(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    }
}

/// A closed stdout (e.g. piping into `head`) is a normal way to stop us.
fn stream_err(e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        std::process::exit(0);
    }
    CliError {
        code: 3,
        msg: e.to_string(),
    }
}

fn is_corpus_cache(path: &Path) -> Result<bool, CliError> {
    let mut file = File::open(path).map_err(|e| from_io(path, e))?;
    let mut buf = [0u8; 12];
    let n = file.read(&mut buf).map_err(|e| from_io(path, e))?;
    Ok(buf[..n].starts_with(b"TKMCORPUS 1"))
}

fn load_training_corpus(
    path: &Path,
    flags: &PreprocessFlags,
) -> Result<(Corpus, Option<tkm_core::corpus::BuildStats>), CliError> {
    let file = File::open(path).map_err(|e| from_io(path, e))?;
    let reader = BufReader::new(file);
    if is_corpus_cache(path)? {
        let corpus = load_corpus(reader).map_err(input_err)?;
        Ok((corpus, None))
    } else {
        let opts = prep_options(flags)?;
        let docs = read_raw_documents(reader, flags.labeled).map_err(input_err)?;
        let (corpus, stats) = build_corpus(docs, &opts).map_err(input_err)?;
        Ok((corpus, Some(stats)))
    }
}

/// doc id, optional label, encoded tokens.
type EncodedDoc = (usize, Option<String>, Vec<u32>);

/// Documents encoded against the model's vocabulary: raw text goes through
/// the preprocessing pipeline; cached corpora are re-mapped word by word.
fn load_docs_for_model(
    path: &Path,
    flags: &PreprocessFlags,
    model: &TrainedModel,
) -> Result<Vec<EncodedDoc>, CliError> {
    let file = File::open(path).map_err(|e| from_io(path, e))?;
    let reader = BufReader::new(file);
    if is_corpus_cache(path)? {
        let corpus = load_corpus(reader).map_err(input_err)?;
        let remap: Vec<Option<u32>> = (0..corpus.vocabulary.len() as u32)
            .map(|w| model.vocabulary.id(corpus.vocabulary.word(w)))
            .collect();
        Ok(corpus
            .documents
            .into_iter()
            .map(|doc| {
                let tokens = doc
                    .tokens
                    .iter()
                    .filter_map(|&w| remap[w as usize])
                    .collect();
                (doc.doc_id, doc.label, tokens)
            })
            .collect())
    } else {
        let opts = prep_options(flags)?;
        let docs = read_raw_documents(reader, flags.labeled).map_err(input_err)?;
        Ok(docs
            .into_iter()
            .enumerate()
            .map(|(i, (label, text))| (i, label, encode_document(&text, &model.vocabulary, &opts)))
            .collect())
    }
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    let file = File::open(path).map_err(|e| CliError {
        code: 3,
        msg: format!("{}: {e}", path.display()),
    })?;
    TrainedModel::load(BufReader::new(file)).map_err(model_err)
}

fn create_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path).map_err(|e| from_io(path, e))?;
    Ok(BufWriter::new(file))
}

enum Sink {
    Stdout(std::io::Stdout),
    File(BufWriter<File>),
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            Sink::Stdout(s) => s.write(buf),
            Sink::File(f) => f.write(buf),
        }
    }

    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            Sink::Stdout(s) => s.flush(),
            Sink::File(f) => f.flush(),
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Sink, CliError> {
    match path {
        Some(p) => Ok(Sink::File(create_out(p)?)),
        None => Ok(Sink::Stdout(std::io::stdout())),
    }
}

pub(crate) fn preprocess(
    input: &Path,
    flags: &PreprocessFlags,
    out: &Path,
    quiet: bool,
) -> CliResult {
    let opts = prep_options(flags)?;
    let file = File::open(input).map_err(|e| from_io(input, e))?;
    let docs = read_raw_documents(BufReader::new(file), flags.labeled).map_err(input_err)?;
    let (corpus, stats) = build_corpus(docs, &opts).map_err(input_err)?;
    let mut w = create_out(out)?;
    save_corpus(&corpus, &mut w).map_err(input_err)?;
    w.flush().map_err(|e| from_io(out, e))?;
    if !quiet {
        eprintln!(
            "preprocess: {} of {} documents kept ({} dropped), {} words, {} tokens",
            stats.docs_kept,
            stats.docs_in,
            stats.docs_dropped,
            stats.vocab_size,
            stats.total_tokens
        );
    }
    Ok(())
}

pub(crate) fn train(
    corpus_path: &Path,
    prep: &PreprocessFlags,
    hyper: &HyperFlags,
    out: &Path,
    log_path: Option<&Path>,
    workers: usize,
    quiet: bool,
) -> CliResult {
    let hp = hyperparams(hyper);
    hp.validate().map_err(input_err)?;
    let (corpus, stats) = load_training_corpus(corpus_path, prep)?;
    if !quiet {
        if let Some(s) = stats {
            eprintln!(
                "corpus: {} documents ({} dropped), {} words, {} tokens",
                s.docs_kept, s.docs_dropped, s.vocab_size, s.total_tokens
            );
        }
        eprintln!(
            "training: k={} alpha={} beta={} delta={} window={} gamma={} seed={} workers={workers}",
            hp.k, hp.alpha, hp.beta, hp.delta, hp.window, hp.gamma, hp.seed
        );
    }
    let outcome = tkm_core::train(&corpus, &hp, workers).map_err(input_err)?;
    if !quiet {
        for s in &outcome.log {
            eprintln!(
                "sweep {}: topics={} changed={:.6} max_delta_f={:.3e} ({} ms)",
                s.sweep, s.active_topics, s.changed_fraction, s.max_delta_f, s.elapsed_ms
            );
        }
        eprintln!(
            "done: {} topics after {} sweeps ({})",
            outcome.model.num_topics(),
            outcome.model.meta.sweeps_run,
            outcome.model.meta.convergence
        );
    }
    if let Some(path) = log_path {
        let mut w = create_out(path)?;
        writeln!(
            w,
            "sweep,active_topics,changed_fraction,max_delta_f,elapsed_ms"
        )
        .map_err(|e| from_io(path, e))?;
        for s in &outcome.log {
            writeln!(
                w,
                "{},{},{},{},{}",
                s.sweep, s.active_topics, s.changed_fraction, s.max_delta_f, s.elapsed_ms
            )
            .map_err(|e| from_io(path, e))?;
        }
        w.flush().map_err(|e| from_io(path, e))?;
    }
    outcome.model.save_to_path(out).map_err(input_err)?;
    Ok(())
}

pub(crate) fn topics(model_path: &Path, top: usize, format: TopicsFormat) -> CliResult {
    let model = load_model(model_path)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let mut run = || -> std::io::Result<()> {
        match format {
            TopicsFormat::Plain => {
                for (ti, &t) in model.active_topics.iter().enumerate() {
                    writeln!(w, "topic {t}  mass={}", model.topic_mass(ti))?;
                    for (rank, (wid, score)) in model
                        .top_words(t, top)
                        .expect("topic is active")
                        .iter()
                        .enumerate()
                    {
                        writeln!(
                            w,
                            "  {:>2}. {:<24} f_hu={:.6} f={:.6}",
                            rank + 1,
                            model.vocabulary.word(*wid),
                            score,
                            model.f.get(*wid, ti)
                        )?;
                    }
                }
            }
            TopicsFormat::Csv => {
                writeln!(w, "topic,rank,word_id,word,f_hu,f,n")?;
                for (ti, &t) in model.active_topics.iter().enumerate() {
                    for (rank, (wid, score)) in model
                        .top_words(t, top)
                        .expect("topic is active")
                        .iter()
                        .enumerate()
                    {
                        writeln!(
                            w,
                            "{t},{},{wid},{},{},{},{}",
                            rank + 1,
                            csv_field(model.vocabulary.word(*wid)),
                            fmt_f64(*score),
                            fmt_f64(model.f.get(*wid, ti)),
                            model.counts.get(*wid, ti)
                        )?;
                    }
                }
            }
        }
        Ok(())
    };
    run().map_err(stream_err)
}

pub(crate) fn infer(
    model_path: &Path,
    input: &Path,
    prep: &PreprocessFlags,
    out: Option<&Path>,
    token_topics: Option<&Path>,
    quiet: bool,
) -> CliResult {
    let model = load_model(model_path)?;
    let docs = load_docs_for_model(input, prep, &model)?;
    let mut w = sink(out)?;
    let mut tokens_out = match token_topics {
        Some(p) => Some(create_out(p)?),
        None => None,
    };
    let io_err = stream_err;

    write!(w, "doc_id,label").map_err(io_err)?;
    for &t in &model.active_topics {
        write!(w, ",t{t}").map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;
    for (doc_id, label, tokens) in &docs {
        let dt = tkm_core::infer_topics(&model, tokens, *doc_id);
        if dt.fallback_uniform && !quiet {
            eprintln!("warning: document {doc_id} has no usable tokens; uniform distribution");
        }
        write!(w, "{doc_id},{}", csv_field(label.as_deref().unwrap_or(""))).map_err(io_err)?;
        for v in &dt.dist {
            write!(w, ",{}", fmt_f64(*v)).map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
        if let Some(tw) = tokens_out.as_mut() {
            let assigned = tkm_core::assign_unseen(&model, tokens, &dt);
            let ids: Vec<String> = assigned.iter().map(|t| t.to_string()).collect();
            writeln!(tw, "{doc_id}\t{}", ids.join(" ")).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    if let Some(mut tw) = tokens_out {
        tw.flush().map_err(io_err)?;
    }
    Ok(())
}

pub(crate) fn prune(model_path: &Path, gamma: Option<f64>, out: &Path, quiet: bool) -> CliResult {
    let model = load_model(model_path)?;
    let gamma = gamma.unwrap_or(model.hyperparams.gamma);
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(input_err(TkmError::InvalidHyperparams(
            "gamma must be >= 0".into(),
        )));
    }
    let kept = distinct_topics(
        &model.counts,
        &model.active_topics,
        gamma,
        model.hyperparams.beta,
    )
    .map_err(input_err)?;
    let pruned = model.retain_topics(&kept).map_err(input_err)?;
    if !quiet {
        eprintln!(
            "prune: kept {} of {} topics at gamma={gamma}",
            kept.len(),
            model.num_topics()
        );
    }
    pruned.save_to_path(out).map_err(input_err)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn eval(
    model_path: &Path,
    corpus: Option<&Path>,
    prep: &PreprocessFlags,
    reference: Option<&Path>,
    cooc_cache: Option<&Path>,
    save_cooc: Option<&Path>,
    metrics: &[Metric],
    gamma: Option<f64>,
    out: Option<&Path>,
) -> CliResult {
    let model = load_model(model_path)?;
    let mut rows: Vec<(String, String, String)> = Vec::new();

    for metric in metrics {
        match metric {
            Metric::Toc => {
                let path = corpus.ok_or_else(|| CliError {
                    code: 2,
                    msg: "--corpus is required for the toc metric".into(),
                })?;
                let docs = load_docs_for_model(path, prep, &model)?;
                let value = tkm_core::toc(&model, docs.iter().map(|(_, _, t)| t.as_slice()));
                rows.push(("toc".into(), String::new(), fmt_f64(value)));
            }
            Metric::Pmi => {
                let index = build_or_load_index(&model, reference, cooc_cache, save_cooc, prep)?;
                let report = model_pmi(&model, &index).map_err(input_err)?;
                for t in &report.topics {
                    rows.push(("pmi".into(), t.topic.to_string(), fmt_f64(t.score)));
                }
                rows.push(("pmi".into(), String::new(), fmt_f64(report.score)));
            }
            Metric::Distinct => {
                let gamma = gamma.unwrap_or(model.hyperparams.gamma);
                let kept = distinct_topics(
                    &model.counts,
                    &model.active_topics,
                    gamma,
                    model.hyperparams.beta,
                )
                .map_err(input_err)?;
                for &t in &kept {
                    rows.push(("distinct_kept".into(), t.to_string(), "1".into()));
                }
                rows.push((
                    "distinct_topics".into(),
                    String::new(),
                    kept.len().to_string(),
                ));
            }
        }
    }

    let mut w = sink(out)?;
    let io_err = stream_err;
    writeln!(w, "metric,topic,value").map_err(io_err)?;
    for (metric, topic, value) in rows {
        writeln!(w, "{metric},{topic},{value}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

fn build_or_load_index(
    model: &TrainedModel,
    reference: Option<&Path>,
    cooc_cache: Option<&Path>,
    save_cooc: Option<&Path>,
    prep: &PreprocessFlags,
) -> Result<CooccurrenceIndex, CliError> {
    if let Some(path) = cooc_cache {
        let file = File::open(path).map_err(|e| from_io(path, e))?;
        return CooccurrenceIndex::load(BufReader::new(file)).map_err(input_err);
    }
    let Some(path) = reference else {
        return Err(CliError {
            code: 2,
            msg: "--reference (or --cooc-cache) is required for the pmi metric".into(),
        });
    };
    // Index the union of every topic's top-10 words.
    let mut words: HashSet<String> = HashSet::new();
    for &t in &model.active_topics {
        for (wid, _) in model.top_words(t, 10).map_err(input_err)? {
            words.insert(model.vocabulary.word(wid).to_string());
        }
    }
    let opts = prep_options(prep)?;
    let file = File::open(path).map_err(|e| from_io(path, e))?;
    let docs = BufReader::new(file)
        .lines()
        .map(|line| tkm_core::tokenize_and_preprocess(&line.unwrap_or_default(), &opts));
    let index = build_cooc_index(docs, &words).map_err(input_err)?;
    if let Some(out) = save_cooc {
        let mut w = create_out(out)?;
        index.save(&mut w).map_err(input_err)?;
        w.flush().map_err(|e| from_io(out, e))?;
    }
    Ok(index)
}

pub(crate) fn export_features(
    model_path: &Path,
    corpus: &Path,
    prep: &PreprocessFlags,
    out: &Path,
) -> CliResult {
    let model = load_model(model_path)?;
    let docs = load_docs_for_model(corpus, prep, &model)?;
    let mut w = create_out(out)?;
    tkm_core::export_features(&model, docs, &mut w).map_err(input_err)?;
    w.flush().map_err(|e| from_io(out, e))?;
    Ok(())
}
