//! Model state, keyword-score mathematics and model persistence.
//!
//! Scores live in dense word-major matrices whose columns are the currently
//! active topics. All logarithms are natural.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::Vocabulary;
use crate::error::{Result, TkmError};
use crate::textio::{fmt_f64, parse_f64, parse_u32, parse_u64, parse_usize};
use crate::trainer::TokenAssignments;

/// Training hyperparameters. Defaults follow the reference configuration:
/// alpha 2.5, beta 0.05, delta 1.5, window 7, gamma 0.25.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Upper bound on the number of topics.
    pub k: usize,
    /// Topic-concentration exponent for document distributions.
    pub alpha: f64,
    /// Word prior (pseudo-count).
    pub beta: f64,
    /// Exponent weighting the concentration score.
    pub delta: f64,
    /// Sliding-window half-width in tokens (L).
    pub window: usize,
    /// SKL threshold below which two topics are considered redundant.
    pub gamma: f64,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Convergence: fraction of tokens that changed topic.
    pub assign_change_tol: f64,
    /// Convergence: max absolute change in any keyword score.
    pub score_change_tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 100,
            alpha: 2.5,
            beta: 0.05,
            delta: 1.5,
            window: 7,
            gamma: 0.25,
            seed: 0,
            max_sweeps: 200,
            assign_change_tol: 1e-3,
            score_change_tol: 1e-4,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TkmError::InvalidHyperparams(msg.into()));
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be >= 0");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be >= 0");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be >= 0");
        }
        if self.max_sweeps < 1 {
            return bad("max_sweeps must be >= 1");
        }
        if self.assign_change_tol.is_nan()
            || self.assign_change_tol < 0.0
            || self.score_change_tol.is_nan()
            || self.score_change_tol < 0.0
        {
            return bad("convergence tolerances must be >= 0");
        }
        Ok(())
    }
}

/// Dense word-major f64 matrix; columns are active topics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    words: usize,
    topics: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeroed(words: usize, topics: usize) -> Self {
        ScoreMatrix {
            words,
            topics,
            data: vec![0.0; words * topics],
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    #[inline]
    pub fn row(&self, w: u32) -> &[f64] {
        let start = w as usize * self.topics;
        &self.data[start..start + self.topics]
    }

    #[inline]
    pub fn row_mut(&mut self, w: u32) -> &mut [f64] {
        let start = w as usize * self.topics;
        &mut self.data[start..start + self.topics]
    }

    pub fn get(&self, w: u32, ti: usize) -> f64 {
        self.data[w as usize * self.topics + ti]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Column sums, accumulated in ascending word order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.topics];
        for row in self.data.chunks_exact(self.topics) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Copy of the matrix keeping only the selected columns.
    pub fn select_columns(&self, cols: &[usize]) -> ScoreMatrix {
        let mut out = ScoreMatrix::zeroed(self.words, cols.len());
        for w in 0..self.words {
            let src = &self.data[w * self.topics..(w + 1) * self.topics];
            let dst = &mut out.data[w * cols.len()..(w + 1) * cols.len()];
            for (d, &c) in dst.iter_mut().zip(cols) {
                *d = src[c];
            }
        }
        out
    }
}

/// Dense word-major assignment-count matrix n(w,t).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    words: usize,
    topics: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn zeroed(words: usize, topics: usize) -> Self {
        CountMatrix {
            words,
            topics,
            data: vec![0; words * topics],
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    #[inline]
    pub fn row(&self, w: u32) -> &[u32] {
        let start = w as usize * self.topics;
        &self.data[start..start + self.topics]
    }

    pub fn get(&self, w: u32, ti: usize) -> u32 {
        self.data[w as usize * self.topics + ti]
    }

    pub fn set(&mut self, w: u32, ti: usize, v: u32) {
        self.data[w as usize * self.topics + ti] = v;
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    pub fn total(&self) -> u64 {
        self.data.iter().map(|&c| c as u64).sum()
    }

    pub fn column_total(&self, ti: usize) -> u64 {
        self.data[ti..]
            .iter()
            .step_by(self.topics)
            .map(|&c| c as u64)
            .sum()
    }

    pub fn select_columns(&self, cols: &[usize]) -> CountMatrix {
        let mut out = CountMatrix::zeroed(self.words, cols.len());
        for w in 0..self.words {
            let src = &self.data[w * self.topics..(w + 1) * self.topics];
            let dst = &mut out.data[w * cols.len()..(w + 1) * cols.len()];
            for (d, &c) in dst.iter_mut().zip(cols) {
                *d = src[c];
            }
        }
        out
    }
}

/// Per-document topic distributions p(t|d), row per document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMatrix {
    docs: usize,
    topics: usize,
    data: Vec<f64>,
}

impl DocTopicMatrix {
    pub fn filled(docs: usize, topics: usize, value: f64) -> Self {
        DocTopicMatrix {
            docs,
            topics,
            data: vec![value; docs * topics],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let topics = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * topics);
        for row in rows {
            assert_eq!(row.len(), topics);
            data.extend_from_slice(row);
        }
        DocTopicMatrix {
            docs: rows.len(),
            topics,
            data,
        }
    }

    pub fn docs(&self) -> usize {
        self.docs
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    #[inline]
    pub fn row(&self, d: usize) -> &[f64] {
        &self.data[d * self.topics..(d + 1) * self.topics]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Mutable training state: active topics, counts, scores and per-document
/// distributions. Read-only during a sweep; mutated between sweeps by a
/// single writer.
#[derive(Debug, Clone)]
pub struct ModelState {
    /// Active topic ids, ascending. Columns of all matrices follow this order.
    pub active_topics: Vec<u32>,
    pub counts: CountMatrix,
    pub f: ScoreMatrix,
    /// Per-topic normalizers of `f` (sum of unnormalized scores).
    pub f_norms: Vec<f64>,
    pub con: Vec<f64>,
    /// Per-word assignment entropy H(w) in nats.
    pub entropy: Vec<f64>,
    pub doc_topics: DocTopicMatrix,
    pub sweep_index: usize,
    /// Sliding-window half-width used for assignments (from the hyperparams).
    pub window: usize,
    pub(crate) assignments: TokenAssignments,
    pub(crate) prev_assignments: TokenAssignments,
}

impl ModelState {
    pub fn num_topics(&self) -> usize {
        self.active_topics.len()
    }

    /// Column index of a topic id, if active.
    pub fn topic_index(&self, topic: u32) -> Option<usize> {
        self.active_topics.binary_search(&topic).ok()
    }

    /// Per-token topic assignments from the most recent sweep.
    pub fn assignments(&self) -> &TokenAssignments {
        &self.assignments
    }
}

/// Shannon entropy of a probability vector, in nats, with 0·ln 0 = 0.
pub fn entropy(topic_dist: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &p in topic_dist {
        if p < 0.0 {
            return Err(TkmError::DistributionInvalid { sum: p });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(TkmError::DistributionInvalid { sum });
    }
    Ok(entropy_unchecked(topic_dist))
}

#[inline]
pub(crate) fn entropy_unchecked(dist: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in dist {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// Concentration score of a word: how exclusively its assignments fall into
/// few topics, guarded so that rare words are not over-rewarded.
///
/// con = ( ln(min(|T|, n(w)+1)) / (1 + H(w)) )^delta
pub fn concentration(global_count: u64, num_topics: usize, entropy: f64, delta: f64) -> f64 {
    let m = (num_topics as u64).min(global_count + 1);
    ((m as f64).ln() / (1.0 + entropy)).powf(delta)
}

/// Keyword-score matrix together with its per-topic normalizers.
#[derive(Debug, Clone)]
pub struct KeywordScores {
    pub matrix: ScoreMatrix,
    pub norms: Vec<f64>,
    /// Column indexes whose normalizer was zero (rows were set uniform).
    pub degenerate: Vec<usize>,
}

/// Compute f(w,t) = ln(1 + n(w,t) + beta)·con(w), normalized per topic.
///
/// Errors with `DegenerateTopic` when a topic's normalizer is zero, which
/// signals that the topic must be pruned.
pub fn compute_keyword_scores(
    counts: &CountMatrix,
    active_topics: &[u32],
    con: &[f64],
    beta: f64,
) -> Result<KeywordScores> {
    let scores = compute_keyword_scores_lenient(counts, con, beta);
    if scores.degenerate.is_empty() {
        Ok(scores)
    } else {
        Err(TkmError::DegenerateTopic {
            topics: scores
                .degenerate
                .iter()
                .map(|&ti| active_topics[ti])
                .collect(),
        })
    }
}

/// Same as [`compute_keyword_scores`] but degenerate columns are filled with
/// the uniform distribution and reported instead of raised.
pub(crate) fn compute_keyword_scores_lenient(
    counts: &CountMatrix,
    con: &[f64],
    beta: f64,
) -> KeywordScores {
    let words = counts.words();
    let topics = counts.topics();
    let mut matrix = ScoreMatrix::zeroed(words, topics);
    for w in 0..words as u32 {
        let c = con[w as usize];
        let src = counts.row(w);
        let dst = matrix.row_mut(w);
        for (d, &n) in dst.iter_mut().zip(src) {
            *d = (1.0 + n as f64 + beta).ln() * c;
        }
    }
    let norms = matrix.column_sums();
    let mut degenerate = Vec::new();
    for (ti, &z) in norms.iter().enumerate() {
        if z == 0.0 {
            degenerate.push(ti);
        }
    }
    let uniform = 1.0 / words as f64;
    for w in 0..words as u32 {
        let row = matrix.row_mut(w);
        for (ti, v) in row.iter_mut().enumerate() {
            if norms[ti] == 0.0 {
                *v = uniform;
            } else {
                *v /= norms[ti];
            }
        }
    }
    KeywordScores {
        matrix,
        norms,
        degenerate,
    }
}

/// Human-readable score matrix f_hu(w,t) = n(w,t)·con(w), normalized per
/// topic. Topics with a zero normalizer get the uniform distribution and are
/// flagged.
#[derive(Debug, Clone)]
pub struct HumanScores {
    pub matrix: ScoreMatrix,
    pub norms: Vec<f64>,
    pub flagged: Vec<usize>,
}

pub fn compute_human_scores(counts: &CountMatrix, con: &[f64]) -> HumanScores {
    let words = counts.words();
    let topics = counts.topics();
    let mut matrix = ScoreMatrix::zeroed(words, topics);
    for w in 0..words as u32 {
        let c = con[w as usize];
        let src = counts.row(w);
        let dst = matrix.row_mut(w);
        for (d, &n) in dst.iter_mut().zip(src) {
            *d = n as f64 * c;
        }
    }
    let norms = matrix.column_sums();
    let flagged: Vec<usize> = norms
        .iter()
        .enumerate()
        .filter(|(_, &z)| z == 0.0)
        .map(|(ti, _)| ti)
        .collect();
    let uniform = 1.0 / words as f64;
    for w in 0..words as u32 {
        let row = matrix.row_mut(w);
        for (ti, v) in row.iter_mut().enumerate() {
            if norms[ti] == 0.0 {
                *v = uniform;
            } else {
                *v /= norms[ti];
            }
        }
    }
    HumanScores {
        matrix,
        norms,
        flagged,
    }
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceReason {
    AssignStable,
    ScoreStable,
    MaxSweeps,
}

impl fmt::Display for ConvergenceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConvergenceReason::AssignStable => "assign_stable",
            ConvergenceReason::ScoreStable => "score_stable",
            ConvergenceReason::MaxSweeps => "max_sweeps",
        };
        f.write_str(s)
    }
}

impl FromStr for ConvergenceReason {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "assign_stable" => Ok(ConvergenceReason::AssignStable),
            "score_stable" => Ok(ConvergenceReason::ScoreStable),
            "max_sweeps" => Ok(ConvergenceReason::MaxSweeps),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingMeta {
    pub sweeps_run: usize,
    pub convergence: ConvergenceReason,
}

/// Persistable training result: vocabulary, hyperparameters, both score
/// matrices, concentration scores and final assignment counts.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub vocabulary: Vocabulary,
    pub hyperparams: Hyperparams,
    pub active_topics: Vec<u32>,
    pub f: ScoreMatrix,
    pub f_hu: ScoreMatrix,
    pub con: Vec<f64>,
    pub counts: CountMatrix,
    pub f_norms: Vec<f64>,
    pub f_hu_norms: Vec<f64>,
    pub meta: TrainingMeta,
}

impl TrainedModel {
    pub fn num_topics(&self) -> usize {
        self.active_topics.len()
    }

    pub fn topic_index(&self, topic: u32) -> Option<usize> {
        self.active_topics.binary_search(&topic).ok()
    }

    /// Total assignment count of a topic (by column index).
    pub fn topic_mass(&self, ti: usize) -> u64 {
        self.counts.column_total(ti)
    }

    /// The `m` highest-ranked words of a topic by f_hu, ties broken by
    /// ascending word id. Returns `(word_id, f_hu)` pairs.
    pub fn top_words(&self, topic: u32, m: usize) -> Result<Vec<(u32, f64)>> {
        let ti = self
            .topic_index(topic)
            .ok_or(TkmError::TopicInactive { topic })?;
        let mut ranked: Vec<(u32, f64)> = (0..self.vocabulary.len() as u32)
            .map(|w| (w, self.f_hu.get(w, ti)))
            .collect();
        ranked.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores are finite")
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(m);
        Ok(ranked)
    }

    /// A copy of the model restricted to the given topic ids; per-topic score
    /// normalization is unaffected.
    pub fn retain_topics(&self, keep: &[u32]) -> Result<TrainedModel> {
        let mut cols = Vec::with_capacity(keep.len());
        for &t in keep {
            cols.push(
                self.topic_index(t)
                    .ok_or(TkmError::TopicInactive { topic: t })?,
            );
        }
        Ok(TrainedModel {
            vocabulary: self.vocabulary.clone(),
            hyperparams: self.hyperparams.clone(),
            active_topics: keep.to_vec(),
            f: self.f.select_columns(&cols),
            f_hu: self.f_hu.select_columns(&cols),
            con: self.con.clone(),
            counts: self.counts.select_columns(&cols),
            f_norms: cols.iter().map(|&c| self.f_norms[c]).collect(),
            f_hu_norms: cols.iter().map(|&c| self.f_hu_norms[c]).collect(),
            meta: self.meta,
        })
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let hp = &self.hyperparams;
        writeln!(w, "{MODEL_MAGIC}")?;
        writeln!(w, "k={}", hp.k)?;
        writeln!(w, "alpha={}", fmt_f64(hp.alpha))?;
        writeln!(w, "beta={}", fmt_f64(hp.beta))?;
        writeln!(w, "delta={}", fmt_f64(hp.delta))?;
        writeln!(w, "window={}", hp.window)?;
        writeln!(w, "gamma={}", fmt_f64(hp.gamma))?;
        writeln!(w, "seed={}", hp.seed)?;
        writeln!(w, "max_sweeps={}", hp.max_sweeps)?;
        writeln!(w, "assign_change_tol={}", fmt_f64(hp.assign_change_tol))?;
        writeln!(w, "score_change_tol={}", fmt_f64(hp.score_change_tol))?;
        writeln!(w, "sweeps_run={}", self.meta.sweeps_run)?;
        writeln!(w, "convergence={}", self.meta.convergence)?;
        writeln!(w, "vocab {}", self.vocabulary.len())?;
        for id in 0..self.vocabulary.len() as u32 {
            writeln!(
                w,
                "{id}\t{}\t{}",
                self.vocabulary.word(id),
                self.vocabulary.global_count(id)
            )?;
        }
        writeln!(w, "con {}", self.con.len())?;
        for (id, &c) in self.con.iter().enumerate() {
            writeln!(w, "{id}\t{}", fmt_f64(c))?;
        }
        writeln!(w, "topics {}", self.active_topics.len())?;
        for (ti, &t) in self.active_topics.iter().enumerate() {
            writeln!(
                w,
                "topic {t} {} {}",
                fmt_f64(self.f_norms[ti]),
                fmt_f64(self.f_hu_norms[ti])
            )?;
            for wid in 0..self.vocabulary.len() as u32 {
                let n = self.counts.get(wid, ti);
                if n > 0 {
                    writeln!(
                        w,
                        "{wid}\t{}\t{}\t{n}",
                        fmt_f64(self.f.get(wid, ti)),
                        fmt_f64(self.f_hu.get(wid, ti))
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn save_to_path(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.save(&mut buf)?;
        use std::io::Write as _;
        buf.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<TrainedModel> {
        ModelReader::new(reader).read()
    }

    pub fn load_from_path(path: impl AsRef<std::path::Path>) -> Result<TrainedModel> {
        let file = std::fs::File::open(path)?;
        TrainedModel::load(std::io::BufReader::new(file))
    }
}

const MODEL_MAGIC: &str = "TKM 1";

struct ModelReader<R> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
}

impl<R: BufRead> ModelReader<R> {
    fn new(reader: R) -> Self {
        ModelReader {
            lines: reader.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, String)> {
        match self.lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(TkmError::format(0, "unexpected end of file")),
        }
    }

    fn key_value(&mut self, key: &str) -> Result<String> {
        let (ln, line) = self.next_line()?;
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(TkmError::format(ln, format!("expected key {key:?}"))),
        }
    }

    fn read(&mut self) -> Result<TrainedModel> {
        let (ln, magic) = self.next_line()?;
        if magic != MODEL_MAGIC {
            return Err(TkmError::format(ln, format!("expected {MODEL_MAGIC:?}")));
        }
        let hp = Hyperparams {
            k: parse_usize(&self.key_value("k")?, 0)?,
            alpha: parse_f64(&self.key_value("alpha")?, 0)?,
            beta: parse_f64(&self.key_value("beta")?, 0)?,
            delta: parse_f64(&self.key_value("delta")?, 0)?,
            window: parse_usize(&self.key_value("window")?, 0)?,
            gamma: parse_f64(&self.key_value("gamma")?, 0)?,
            seed: parse_u64(&self.key_value("seed")?, 0)?,
            max_sweeps: parse_usize(&self.key_value("max_sweeps")?, 0)?,
            assign_change_tol: parse_f64(&self.key_value("assign_change_tol")?, 0)?,
            score_change_tol: parse_f64(&self.key_value("score_change_tol")?, 0)?,
        };
        let sweeps_run = parse_usize(&self.key_value("sweeps_run")?, 0)?;
        let convergence: ConvergenceReason = self
            .key_value("convergence")?
            .parse()
            .map_err(|_| TkmError::format(0, "unknown convergence reason"))?;

        let (ln, header) = self.next_line()?;
        let vocab_len = match header.strip_prefix("vocab ") {
            Some(n) => parse_usize(n, ln)?,
            None => return Err(TkmError::format(ln, "expected vocab header")),
        };
        let mut entries = Vec::with_capacity(vocab_len);
        for i in 0..vocab_len {
            let (ln, line) = self.next_line()?;
            let mut parts = line.splitn(3, '\t');
            let (id, word, count) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(TkmError::format(ln, "malformed vocab line")),
            };
            if parse_usize(id, ln)? != i {
                return Err(TkmError::format(ln, "vocab ids must be dense and in order"));
            }
            entries.push((word.to_string(), parse_u64(count, ln)?));
        }
        let vocabulary = Vocabulary::from_entries(entries)?;

        let (ln, header) = self.next_line()?;
        match header.strip_prefix("con ") {
            Some(n) if parse_usize(n, ln)? == vocab_len => {}
            _ => return Err(TkmError::format(ln, "expected con header")),
        }
        let mut con = Vec::with_capacity(vocab_len);
        for i in 0..vocab_len {
            let (ln, line) = self.next_line()?;
            let (id, v) = line
                .split_once('\t')
                .ok_or_else(|| TkmError::format(ln, "malformed con line"))?;
            if parse_usize(id, ln)? != i {
                return Err(TkmError::format(ln, "con ids must be dense and in order"));
            }
            con.push(parse_f64(v, ln)?);
        }

        let (ln, header) = self.next_line()?;
        let num_topics = match header.strip_prefix("topics ") {
            Some(n) => parse_usize(n, ln)?,
            None => return Err(TkmError::format(ln, "expected topics header")),
        };

        let mut active_topics = Vec::with_capacity(num_topics);
        let mut f_norms = Vec::with_capacity(num_topics);
        let mut f_hu_norms = Vec::with_capacity(num_topics);
        // (topic index, word id, f, f_hu, n)
        let mut rows: Vec<(usize, u32, f64, f64, u32)> = Vec::new();
        let mut current: Option<usize> = None;
        for (i, line) in self.lines.by_ref() {
            let (ln, line) = (i + 1, line?);
            if let Some(rest) = line.strip_prefix("topic ") {
                let mut parts = rest.split(' ');
                let (id, fz, hz) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(TkmError::format(ln, "malformed topic header")),
                };
                let id = parse_u32(id, ln)?;
                if let Some(&last) = active_topics.last() {
                    if id <= last {
                        return Err(TkmError::format(ln, "topic ids must be ascending"));
                    }
                }
                active_topics.push(id);
                f_norms.push(parse_f64(fz, ln)?);
                f_hu_norms.push(parse_f64(hz, ln)?);
                current = Some(active_topics.len() - 1);
            } else {
                let ti = current.ok_or_else(|| TkmError::format(ln, "row before any topic"))?;
                let mut parts = line.splitn(4, '\t');
                let (wid, fv, hv, n) =
                    match (parts.next(), parts.next(), parts.next(), parts.next()) {
                        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                        _ => return Err(TkmError::format(ln, "malformed score row")),
                    };
                let wid = parse_u32(wid, ln)?;
                if wid as usize >= vocab_len {
                    return Err(TkmError::format(ln, format!("word id {wid} out of range")));
                }
                rows.push((
                    ti,
                    wid,
                    parse_f64(fv, ln)?,
                    parse_f64(hv, ln)?,
                    parse_u32(n, ln)?,
                ));
            }
        }
        if active_topics.len() != num_topics {
            return Err(TkmError::format(
                0,
                format!(
                    "expected {num_topics} topic blocks, found {}",
                    active_topics.len()
                ),
            ));
        }
        if num_topics == 0 {
            return Err(TkmError::format(0, "model has no topics"));
        }

        // Reconstruct dense matrices. Rows absent from a block are words with
        // n(w,t) = 0: their f is the beta-smoothed floor, their f_hu is 0.
        // A zero normalizer marks a degenerate topic whose rows are uniform.
        let words = vocab_len;
        let uniform = 1.0 / words as f64;
        let beta = hp.beta;
        let mut f = ScoreMatrix::zeroed(words, num_topics);
        let mut f_hu = ScoreMatrix::zeroed(words, num_topics);
        let mut counts = CountMatrix::zeroed(words, num_topics);
        for w in 0..words as u32 {
            let floor = (1.0 + beta).ln() * con[w as usize];
            let f_row = f.row_mut(w);
            for (ti, v) in f_row.iter_mut().enumerate() {
                *v = if f_norms[ti] == 0.0 {
                    uniform
                } else {
                    floor / f_norms[ti]
                };
            }
            let h_row = f_hu.row_mut(w);
            for (ti, v) in h_row.iter_mut().enumerate() {
                *v = if f_hu_norms[ti] == 0.0 { uniform } else { 0.0 };
            }
        }
        for (ti, wid, fv, hv, n) in rows {
            f.row_mut(wid)[ti] = fv;
            f_hu.row_mut(wid)[ti] = hv;
            counts.set(wid, ti, n);
        }

        for (ti, &topic) in active_topics.iter().enumerate() {
            let fs: f64 = (0..words as u32).map(|w| f.get(w, ti)).sum();
            let hs: f64 = (0..words as u32).map(|w| f_hu.get(w, ti)).sum();
            if (fs - 1.0).abs() > 1e-9 || (hs - 1.0).abs() > 1e-9 {
                return Err(TkmError::format(
                    0,
                    format!("topic {topic} scores do not sum to 1"),
                ));
            }
        }

        Ok(TrainedModel {
            vocabulary,
            hyperparams: hp,
            active_topics,
            f,
            f_hu,
            con,
            counts,
            f_norms,
            f_hu_norms,
            meta: TrainingMeta {
                sweeps_run,
                convergence,
            },
        })
    }
}
