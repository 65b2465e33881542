//! Corpus ingestion: tokenization, preprocessing, vocabulary construction
//! and the encoded-corpus cache format.
//!
//! The pipeline is deliberately simple and deterministic: tokens are maximal
//! runs of alphanumeric characters, optionally lowercased, stopword-filtered
//! and stemmed. Words below a global count threshold are removed corpus-wide
//! and documents emptied by filtering are dropped.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Result, TkmError};

/// Stemmer selection. `English` uses the Snowball English stemmer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StemmerKind {
    #[default]
    None,
    English,
}

/// Options for the text preprocessing pipeline.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub lowercase: bool,
    pub stopwords: Option<HashSet<String>>,
    pub stemmer: StemmerKind,
    /// Words with a corpus-wide count below this are removed everywhere.
    pub min_global_count: usize,
    /// Documents with fewer surviving tokens than this are dropped.
    pub min_doc_tokens: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            lowercase: true,
            stopwords: None,
            stemmer: StemmerKind::None,
            min_global_count: 2,
            min_doc_tokens: 1,
        }
    }
}

impl PreprocessOptions {
    pub fn validate(&self) -> Result<()> {
        if self.min_global_count < 1 {
            return Err(TkmError::InvalidHyperparams(
                "min_global_count must be >= 1".into(),
            ));
        }
        if self.min_doc_tokens < 1 {
            return Err(TkmError::InvalidHyperparams(
                "min_doc_tokens must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn make_stemmer(&self) -> Option<Stemmer> {
        match self.stemmer {
            StemmerKind::None => None,
            StemmerKind::English => Some(Stemmer::create(Algorithm::English)),
        }
    }
}

/// Tokenize one raw string and apply the per-token pipeline steps
/// (lowercase, stopword removal, stemming). Global-count filtering is a
/// corpus-level concern and is not applied here.
pub fn tokenize_and_preprocess(text: &str, opts: &PreprocessOptions) -> Vec<String> {
    let stemmer = opts.make_stemmer();
    tokenize_with(text, opts, stemmer.as_ref())
}

fn tokenize_with(text: &str, opts: &PreprocessOptions, stemmer: Option<&Stemmer>) -> Vec<String> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let token = if opts.lowercase {
            run.to_lowercase()
        } else {
            run.to_string()
        };
        if let Some(stop) = &opts.stopwords {
            if stop.contains(&token) {
                continue;
            }
        }
        let token = match stemmer {
            Some(st) => st.stem(&token).into_owned(),
            None => token,
        };
        out.push(token);
    }
    out
}

/// Word <-> dense id mapping with per-word corpus counts n(w).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    word_to_id: HashMap<String, u32>,
    id_to_word: Vec<String>,
    global_count: Vec<u64>,
}

impl Vocabulary {
    /// Build a vocabulary from `(word, count)` entries; ids follow entry order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Vocabulary> {
        let mut word_to_id = HashMap::with_capacity(entries.len());
        let mut id_to_word = Vec::with_capacity(entries.len());
        let mut global_count = Vec::with_capacity(entries.len());
        for (word, count) in entries {
            if word_to_id
                .insert(word.clone(), id_to_word.len() as u32)
                .is_some()
            {
                return Err(TkmError::format(0, format!("duplicate word {word:?}")));
            }
            id_to_word.push(word);
            global_count.push(count);
        }
        Ok(Vocabulary {
            word_to_id,
            id_to_word,
            global_count,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.id_to_word[id as usize]
    }

    /// Corpus-wide occurrence count n(w).
    pub fn global_count(&self, id: u32) -> u64 {
        self.global_count[id as usize]
    }

    pub fn total_tokens(&self) -> u64 {
        self.global_count.iter().sum()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.id_to_word.iter().map(|s| s.as_str())
    }
}

/// A single encoded document: a sequence of word ids plus an optional label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: usize,
    pub tokens: Vec<u32>,
    pub label: Option<String>,
}

/// An encoded corpus. Immutable once built and safe to share across workers.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub total_tokens: u64,
}

/// Counters reported by [`build_corpus`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub docs_in: usize,
    pub docs_kept: usize,
    /// Documents dropped because filtering left them below `min_doc_tokens`.
    pub docs_dropped: usize,
    pub vocab_size: usize,
    pub total_tokens: u64,
}

/// Build an encoded corpus from `(label, text)` pairs.
///
/// Two passes: first count words over the whole stream, then filter words
/// below `min_global_count`, drop documents that fall below `min_doc_tokens`,
/// and assign dense ids in first-occurrence order over the surviving stream.
pub fn build_corpus<I>(doc_stream: I, opts: &PreprocessOptions) -> Result<(Corpus, BuildStats)>
where
    I: IntoIterator<Item = (Option<String>, String)>,
{
    opts.validate()?;
    let raw: Vec<(Option<String>, String)> = doc_stream.into_iter().collect();
    let stats_in = raw.len();

    // Tokenization is pure per document, so it can run in parallel; the
    // ordered collect keeps the result independent of scheduling.
    let tokenized: Vec<(Option<String>, Vec<String>)> = raw
        .into_par_iter()
        .map(|(label, text)| {
            let toks = tokenize_and_preprocess(&text, opts);
            (label, toks)
        })
        .collect();

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for (_, toks) in &tokenized {
        for t in toks {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }

    // Id assignment is serialized so that ids depend only on the input order.
    let mut word_to_id: HashMap<String, u32> = HashMap::new();
    let mut id_to_word: Vec<String> = Vec::new();
    let mut global_count: Vec<u64> = Vec::new();
    let mut documents: Vec<Document> = Vec::new();
    let mut total_tokens: u64 = 0;
    let mut docs_dropped = 0usize;

    for (label, toks) in &tokenized {
        let kept: Vec<&String> = toks
            .iter()
            .filter(|t| counts[t.as_str()] >= opts.min_global_count as u64)
            .collect();
        if kept.len() < opts.min_doc_tokens {
            docs_dropped += 1;
            continue;
        }
        let mut ids = Vec::with_capacity(kept.len());
        for t in kept {
            let id = match word_to_id.get(t.as_str()) {
                Some(&id) => id,
                None => {
                    let id = id_to_word.len() as u32;
                    word_to_id.insert(t.clone(), id);
                    id_to_word.push(t.clone());
                    global_count.push(0);
                    id
                }
            };
            global_count[id as usize] += 1;
            ids.push(id);
        }
        total_tokens += ids.len() as u64;
        documents.push(Document {
            doc_id: documents.len(),
            tokens: ids,
            label: label.clone(),
        });
    }

    if documents.is_empty() {
        return Err(TkmError::EmptyCorpus);
    }

    let stats = BuildStats {
        docs_in: stats_in,
        docs_kept: documents.len(),
        docs_dropped,
        vocab_size: id_to_word.len(),
        total_tokens,
    };
    let corpus = Corpus {
        documents,
        vocabulary: Vocabulary {
            word_to_id,
            id_to_word,
            global_count,
        },
        total_tokens,
    };
    Ok((corpus, stats))
}

/// Encode unseen text against an existing vocabulary. Runs the same pipeline
/// as training; out-of-vocabulary tokens are silently dropped.
pub fn encode_document(text: &str, vocab: &Vocabulary, opts: &PreprocessOptions) -> Vec<u32> {
    tokenize_and_preprocess(text, opts)
        .iter()
        .filter_map(|t| vocab.id(t))
        .collect()
}

/// Read a stopword list: one word per line, blank lines ignored.
pub fn read_stopwords<R: BufRead>(reader: R) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            set.insert(w.to_string());
        }
    }
    Ok(set)
}

/// Parse a raw corpus stream: one document per line; in labeled mode each
/// line is `label<TAB>text`.
pub fn read_raw_documents<R: BufRead>(
    reader: R,
    labeled: bool,
) -> Result<Vec<(Option<String>, String)>> {
    let mut docs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if labeled {
            match line.split_once('\t') {
                Some((label, text)) => {
                    docs.push((Some(label.to_string()), text.to_string()));
                }
                None => docs.push((None, line)),
            }
        } else {
            docs.push((None, line));
        }
    }
    Ok(docs)
}

const CORPUS_MAGIC: &str = "TKMCORPUS 1";

/// Write the encoded-corpus cache format.
pub fn save_corpus<W: Write>(corpus: &Corpus, mut w: W) -> Result<()> {
    writeln!(w, "{CORPUS_MAGIC}")?;
    writeln!(w, "vocab {}", corpus.vocabulary.len())?;
    for id in 0..corpus.vocabulary.len() as u32 {
        writeln!(
            w,
            "{id}\t{}\t{}",
            corpus.vocabulary.word(id),
            corpus.vocabulary.global_count(id)
        )?;
    }
    writeln!(w, "docs {}", corpus.documents.len())?;
    for doc in &corpus.documents {
        let ids: Vec<String> = doc.tokens.iter().map(|t| t.to_string()).collect();
        writeln!(
            w,
            "{}\t{}\t{}",
            doc.doc_id,
            doc.label.as_deref().unwrap_or(""),
            ids.join(" ")
        )?;
    }
    Ok(())
}

/// Read the encoded-corpus cache format back, validating invariants.
pub fn load_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut lines = reader.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(TkmError::format(0, "unexpected end of file")),
        }
    };

    let (ln, magic) = next()?;
    if magic != CORPUS_MAGIC {
        return Err(TkmError::format(ln, format!("expected {CORPUS_MAGIC:?}")));
    }

    let (ln, header) = next()?;
    let vocab_len = match header.strip_prefix("vocab ") {
        Some(n) => crate::textio::parse_usize(n, ln)?,
        None => return Err(TkmError::format(ln, "expected vocab header")),
    };
    let mut entries = Vec::with_capacity(vocab_len);
    for i in 0..vocab_len {
        let (ln, line) = next()?;
        let mut parts = line.splitn(3, '\t');
        let (id, word, count) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(TkmError::format(ln, "malformed vocab line")),
        };
        if crate::textio::parse_usize(id, ln)? != i {
            return Err(TkmError::format(ln, "vocab ids must be dense and in order"));
        }
        entries.push((word.to_string(), crate::textio::parse_u64(count, ln)?));
    }
    let vocabulary = Vocabulary::from_entries(entries)?;

    let (ln, header) = next()?;
    let ndocs = match header.strip_prefix("docs ") {
        Some(n) => crate::textio::parse_usize(n, ln)?,
        None => return Err(TkmError::format(ln, "expected docs header")),
    };
    if ndocs == 0 {
        return Err(TkmError::EmptyCorpus);
    }
    let mut documents = Vec::with_capacity(ndocs);
    let mut total_tokens = 0u64;
    for i in 0..ndocs {
        let (ln, line) = next()?;
        let mut parts = line.splitn(3, '\t');
        let (id, label, ids) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(TkmError::format(ln, "malformed document line")),
        };
        if crate::textio::parse_usize(id, ln)? != i {
            return Err(TkmError::format(ln, "doc ids must be dense and in order"));
        }
        let mut tokens = Vec::new();
        for tok in ids.split_whitespace() {
            let t = crate::textio::parse_u32(tok, ln)?;
            if t as usize >= vocabulary.len() {
                return Err(TkmError::format(ln, format!("token id {t} out of range")));
            }
            tokens.push(t);
        }
        if tokens.is_empty() {
            return Err(TkmError::format(ln, "document has no tokens"));
        }
        total_tokens += tokens.len() as u64;
        documents.push(Document {
            doc_id: i,
            tokens,
            label: if label.is_empty() {
                None
            } else {
                Some(label.to_string())
            },
        });
    }
    if total_tokens != vocabulary.total_tokens() {
        return Err(TkmError::format(
            0,
            "vocabulary counts do not match document tokens",
        ));
    }
    Ok(Corpus {
        documents,
        vocabulary,
        total_tokens,
    })
}
