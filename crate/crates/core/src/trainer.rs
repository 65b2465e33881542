//! Training: E-step token assignment with a sliding keyword window, count
//! accumulation, score updates, topic pruning and convergence.
//!
//! Sweeps run in parallel over disjoint document shards. Each worker owns a
//! private count accumulator and writes assignments into its own slice;
//! merges happen in fixed shard order. Because count merges are integer
//! additions and every per-document computation is pure, results are
//! bit-identical for any shard or worker count.

use std::ops::Range;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Corpus, Document};
use crate::error::{Result, TkmError};
use crate::model::{
    compute_human_scores, compute_keyword_scores_lenient, concentration, entropy_unchecked,
    ConvergenceReason, CountMatrix, DocTopicMatrix, Hyperparams, ModelState, ScoreMatrix,
    TrainedModel, TrainingMeta,
};
use crate::selfreg;

/// Per-token topic assignments for a whole corpus, stored flat with
/// per-document offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAssignments {
    offsets: Vec<usize>,
    topics: Vec<u32>,
}

impl TokenAssignments {
    fn with_topics(corpus: &Corpus, fill: u32) -> Self {
        let mut offsets = Vec::with_capacity(corpus.documents.len() + 1);
        offsets.push(0usize);
        let mut total = 0usize;
        for doc in &corpus.documents {
            total += doc.tokens.len();
            offsets.push(total);
        }
        TokenAssignments {
            offsets,
            topics: vec![fill; total],
        }
    }

    pub fn num_docs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_tokens(&self) -> usize {
        self.topics.len()
    }

    /// Topic ids assigned to the tokens of document `d`.
    pub fn doc(&self, d: usize) -> &[u32] {
        &self.topics[self.offsets[d]..self.offsets[d + 1]]
    }
}

/// Result of one full E-step pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    /// Fraction of tokens whose topic differs from the previous sweep
    /// (1.0 on the first sweep).
    pub changed_fraction: f64,
    pub token_total: u64,
}

/// Per-sweep diagnostics, one row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub sweep: usize,
    pub active_topics: usize,
    pub changed_fraction: f64,
    pub max_delta_f: f64,
    pub elapsed_ms: u64,
}

/// A trained model together with the training log and the assignments of a
/// final pass made with the finished scores.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: TrainedModel,
    pub log: Vec<SweepStats>,
    pub final_assignments: TokenAssignments,
}

/// Sliding-window maxima over per-topic score sequences, one monotone ring
/// deque per topic. Pushes and evictions are amortized O(1), so the window
/// width drops out of the per-token cost.
pub(crate) struct WindowMax {
    topics: usize,
    mask: usize,
    pos: Vec<u32>,
    val: Vec<f64>,
    head: Vec<u32>,
    len: Vec<u32>,
}

impl WindowMax {
    pub(crate) fn new(topics: usize, window: usize, max_doc_len: usize) -> Self {
        let needed = (2 * window + 1).min(max_doc_len.max(1)) + 1;
        let cap = needed.next_power_of_two();
        WindowMax {
            topics,
            mask: cap - 1,
            pos: vec![0; topics * cap],
            val: vec![0.0; topics * cap],
            head: vec![0; topics],
            len: vec![0; topics],
        }
    }

    #[inline]
    fn reset(&mut self) {
        self.head.fill(0);
        self.len.fill(0);
    }

    /// Push scores of the word at position `p` for every topic.
    #[inline]
    fn push_row(&mut self, p: u32, row: &[f64]) {
        let cap = self.mask + 1;
        for (ti, &v) in row.iter().enumerate() {
            let base = ti * cap;
            let head = self.head[ti] as usize;
            let mut len = self.len[ti] as usize;
            while len > 0 {
                let back = (head + len - 1) & self.mask;
                if self.val[base + back] <= v {
                    len -= 1;
                } else {
                    break;
                }
            }
            let slot = (head + len) & self.mask;
            self.pos[base + slot] = p;
            self.val[base + slot] = v;
            self.len[ti] = (len + 1) as u32;
        }
    }

    /// Drop entries whose position is left of the window.
    #[inline]
    fn evict_before(&mut self, lo: u32) {
        let cap = self.mask + 1;
        for ti in 0..self.topics {
            let base = ti * cap;
            let mut head = self.head[ti] as usize;
            let mut len = self.len[ti] as usize;
            while len > 0 && self.pos[base + head] < lo {
                head = (head + 1) & self.mask;
                len -= 1;
            }
            self.head[ti] = head as u32;
            self.len[ti] = len as u32;
        }
    }

    #[inline]
    fn max(&self, ti: usize) -> f64 {
        debug_assert!(self.len[ti] > 0);
        self.val[ti * (self.mask + 1) + self.head[ti] as usize]
    }
}

/// Assign every token of one document to its most likely topic:
/// argmax over t of (f(w_i,t) + max_{j in window} f(w_j,t)) · p(t|d),
/// ties broken by the smallest topic (column) index.
///
/// Writes topic *column indices* into `out`; callers translate to topic ids.
pub(crate) fn assign_document(
    f: &ScoreMatrix,
    p_td: &[f64],
    tokens: &[u32],
    window: usize,
    wm: &mut WindowMax,
    out: &mut [u32],
) {
    let len = tokens.len();
    let topics = p_td.len();
    debug_assert_eq!(out.len(), len);
    wm.reset();
    let mut right = 0usize;
    for i in 0..len {
        wm.evict_before(i.saturating_sub(window) as u32);
        let hi = (i + window).min(len - 1);
        while right <= hi {
            wm.push_row(right as u32, f.row(tokens[right]));
            right += 1;
        }
        let row = f.row(tokens[i]);
        let mut best_ti = 0usize;
        let mut best = f64::NEG_INFINITY;
        for ti in 0..topics {
            let v = (row[ti] + wm.max(ti)) * p_td[ti];
            if v > best {
                best = v;
                best_ti = ti;
            }
        }
        out[i] = best_ti as u32;
    }
}

/// Most likely topic of the token at position `i` of a training document,
/// evaluated against the current state. Returns the topic id.
pub fn assign_token(state: &ModelState, doc: &Document, i: usize) -> u32 {
    let tokens = &doc.tokens;
    assert!(i < tokens.len());
    let p_td = state.doc_topics.row(doc.doc_id);
    let topics = state.num_topics();
    let lo = i.saturating_sub(state.window);
    let hi = (i + state.window).min(tokens.len() - 1);
    let row = state.f.row(tokens[i]);
    let mut best_ti = 0usize;
    let mut best = f64::NEG_INFINITY;
    for ti in 0..topics {
        let mut wmax = f64::NEG_INFINITY;
        for &w in &tokens[lo..=hi] {
            let v = state.f.get(w, ti);
            if v > wmax {
                wmax = v;
            }
        }
        let v = (row[ti] + wmax) * p_td[ti];
        if v > best {
            best = v;
            best_ti = ti;
        }
    }
    state.active_topics[best_ti]
}

/// Initialize training state: all k topics active, noisy near-uniform
/// scores (seeded), uniform document distributions, unit concentration.
pub fn init_state(corpus: &Corpus, hp: &Hyperparams) -> Result<ModelState> {
    hp.validate()?;
    if corpus.documents.is_empty() || corpus.vocabulary.is_empty() {
        return Err(TkmError::EmptyCorpus);
    }
    let words = corpus.vocabulary.len();
    let k = hp.k;
    let base = 1.0 / words as f64;
    let noise = 0.1 * base;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut f = ScoreMatrix::zeroed(words, k);
    for w in 0..words as u32 {
        for v in f.row_mut(w) {
            *v = base + rng.random_range(0.0..noise);
        }
    }
    let norms = f.column_sums();
    for w in 0..words as u32 {
        for (v, z) in f.row_mut(w).iter_mut().zip(&norms) {
            *v /= z;
        }
    }
    let f_norms = vec![1.0; k];
    let assignments = TokenAssignments::with_topics(corpus, u32::MAX);
    Ok(ModelState {
        active_topics: (0..k as u32).collect(),
        counts: CountMatrix::zeroed(words, k),
        f,
        f_norms,
        con: vec![1.0; words],
        entropy: vec![0.0; words],
        doc_topics: DocTopicMatrix::filled(corpus.documents.len(), k, 1.0 / k as f64),
        sweep_index: 0,
        window: hp.window,
        prev_assignments: assignments.clone(),
        assignments,
    })
}

fn shard_ranges(corpus: &Corpus, shards: usize) -> Vec<Range<usize>> {
    let shards = shards.max(1).min(corpus.documents.len());
    let target = corpus.total_tokens.div_ceil(shards as u64);
    let mut ranges = Vec::with_capacity(shards);
    let mut start = 0usize;
    let mut acc = 0u64;
    for (i, doc) in corpus.documents.iter().enumerate() {
        acc += doc.tokens.len() as u64;
        if acc >= target && ranges.len() + 1 < shards {
            ranges.push(start..i + 1);
            start = i + 1;
            acc = 0;
        }
    }
    if start < corpus.documents.len() {
        ranges.push(start..corpus.documents.len());
    }
    ranges
}

struct ShardOut {
    counts: Vec<u32>,
    changed: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_shard(
    corpus: &Corpus,
    f: &ScoreMatrix,
    active_topics: &[u32],
    doc_topics: &DocTopicMatrix,
    window: usize,
    max_doc_len: usize,
    prev: &TokenAssignments,
    range: Range<usize>,
    out: &mut [u32],
) -> ShardOut {
    let words = f.words();
    let topics = active_topics.len();
    let mut wm = WindowMax::new(topics, window, max_doc_len);
    let mut counts = vec![0u32; words * topics];
    let mut changed = 0u64;
    let mut cursor = 0usize;
    for d in range {
        let doc = &corpus.documents[d];
        let len = doc.tokens.len();
        let slice = &mut out[cursor..cursor + len];
        assign_document(f, doc_topics.row(d), &doc.tokens, window, &mut wm, slice);
        let prev_doc = prev.doc(d);
        for (i, (&w, ti)) in doc.tokens.iter().zip(slice.iter_mut()).enumerate() {
            let col = *ti as usize;
            counts[w as usize * topics + col] += 1;
            let topic = active_topics[col];
            if topic != prev_doc[i] {
                changed += 1;
            }
            *ti = topic;
        }
        cursor += len;
    }
    ShardOut { counts, changed }
}

/// One E-step pass: reset counts, assign every token of every document, and
/// accumulate n(w,t). `shards` controls the parallel split; results are
/// identical for any value.
pub fn sweep(state: &mut ModelState, corpus: &Corpus, shards: usize) -> SweepResult {
    std::mem::swap(&mut state.assignments, &mut state.prev_assignments);
    let ranges = shard_ranges(corpus, shards);
    let max_doc_len = corpus
        .documents
        .iter()
        .map(|d| d.tokens.len())
        .max()
        .unwrap_or(1);

    let ModelState {
        active_topics,
        counts,
        f,
        doc_topics,
        assignments,
        prev_assignments,
        window,
        ..
    } = state;
    let window = *window;

    // Split the flat assignment buffer into per-shard slices.
    let mut tasks: Vec<(Range<usize>, &mut [u32])> = Vec::with_capacity(ranges.len());
    {
        let mut rest: &mut [u32] = &mut assignments.topics;
        let mut consumed = 0usize;
        for range in &ranges {
            let end = assignments.offsets[range.end];
            let (head, tail) = rest.split_at_mut(end - consumed);
            consumed = end;
            rest = tail;
            tasks.push((range.clone(), head));
        }
    }

    let outs: Vec<ShardOut> = if tasks.len() == 1 {
        let (range, out) = tasks.pop().expect("one shard");
        vec![run_shard(
            corpus,
            f,
            active_topics,
            doc_topics,
            window,
            max_doc_len,
            prev_assignments,
            range,
            out,
        )]
    } else {
        tasks
            .into_par_iter()
            .map(|(range, out)| {
                run_shard(
                    corpus,
                    f,
                    active_topics,
                    doc_topics,
                    window,
                    max_doc_len,
                    prev_assignments,
                    range,
                    out,
                )
            })
            .collect()
    };

    // Merge in fixed shard order; integer sums are order-independent anyway.
    counts.data_mut().fill(0);
    let mut changed = 0u64;
    for shard in outs {
        for (dst, src) in counts.data_mut().iter_mut().zip(&shard.counts) {
            *dst += src;
        }
        changed += shard.changed;
    }

    state.sweep_index += 1;
    SweepResult {
        changed_fraction: changed as f64 / corpus.total_tokens as f64,
        token_total: corpus.total_tokens,
    }
}

/// A pure assignment pass with fixed scores (no count updates). Used for the
/// final pass after convergence.
fn assign_corpus(
    f: &ScoreMatrix,
    active_topics: &[u32],
    doc_topics: &DocTopicMatrix,
    corpus: &Corpus,
    window: usize,
    shards: usize,
) -> TokenAssignments {
    let mut assignments = TokenAssignments::with_topics(corpus, u32::MAX);
    let ranges = shard_ranges(corpus, shards);
    let max_doc_len = corpus
        .documents
        .iter()
        .map(|d| d.tokens.len())
        .max()
        .unwrap_or(1);

    let mut tasks: Vec<(Range<usize>, &mut [u32])> = Vec::with_capacity(ranges.len());
    {
        let offsets = assignments.offsets.clone();
        let mut rest: &mut [u32] = &mut assignments.topics;
        let mut consumed = 0usize;
        for range in &ranges {
            let end = offsets[range.end];
            let (head, tail) = rest.split_at_mut(end - consumed);
            consumed = end;
            rest = tail;
            tasks.push((range.clone(), head));
        }
    }

    let run = |range: Range<usize>, out: &mut [u32]| {
        let topics = active_topics.len();
        let mut wm = WindowMax::new(topics, window, max_doc_len);
        let mut cursor = 0usize;
        for d in range {
            let doc = &corpus.documents[d];
            let len = doc.tokens.len();
            let slice = &mut out[cursor..cursor + len];
            assign_document(f, doc_topics.row(d), &doc.tokens, window, &mut wm, slice);
            for ti in slice.iter_mut() {
                *ti = active_topics[*ti as usize];
            }
            cursor += len;
        }
    };

    if tasks.len() == 1 {
        let (range, out) = tasks.pop().expect("one shard");
        run(range, out);
    } else {
        tasks
            .into_par_iter()
            .for_each(|(range, out)| run(range, out));
    }
    assignments
}

/// Outcome of the M-step score refresh.
#[derive(Debug, Clone)]
pub struct ScoreUpdate {
    /// Max absolute change of any keyword score against the previous sweep.
    pub max_delta_f: f64,
    /// Topic ids whose score normalizer was zero (prune signals).
    pub degenerate: Vec<u32>,
}

/// M-step: recompute p(t|w), H(w), con(w) and the keyword scores from the
/// current counts.
pub fn update_scores(state: &mut ModelState, corpus: &Corpus, hp: &Hyperparams) -> ScoreUpdate {
    let words = corpus.vocabulary.len();
    let topics = state.num_topics();
    let mut dist = vec![0.0f64; topics];
    for w in 0..words as u32 {
        let row = state.counts.row(w);
        let total: u64 = row.iter().map(|&c| c as u64).sum();
        let h = if total == 0 {
            0.0
        } else {
            let inv = 1.0 / total as f64;
            for (d, &c) in dist.iter_mut().zip(row) {
                *d = c as f64 * inv;
            }
            entropy_unchecked(&dist)
        };
        state.entropy[w as usize] = h;
        state.con[w as usize] =
            concentration(corpus.vocabulary.global_count(w), topics, h, hp.delta);
    }

    let scores = compute_keyword_scores_lenient(&state.counts, &state.con, hp.beta);
    let mut max_delta = 0.0f64;
    for (new, old) in scores.matrix.data().iter().zip(state.f.data()) {
        let d = (new - old).abs();
        if d > max_delta {
            max_delta = d;
        }
    }
    let degenerate = scores
        .degenerate
        .iter()
        .map(|&ti| state.active_topics[ti])
        .collect();
    state.f = scores.matrix;
    state.f_norms = scores.norms;
    ScoreUpdate {
        max_delta_f: max_delta,
        degenerate,
    }
}

/// Restrict the state to the given topic ids (ascending).
pub fn restrict_topics(state: &mut ModelState, keep: &[u32]) {
    let cols: Vec<usize> = keep
        .iter()
        .map(|t| {
            state
                .active_topics
                .binary_search(t)
                .expect("kept topic must be active")
        })
        .collect();
    state.counts = state.counts.select_columns(&cols);
    state.f = state.f.select_columns(&cols);
    state.f_norms = cols.iter().map(|&c| state.f_norms[c]).collect();
    state.active_topics = keep.to_vec();
}

/// Shared with inference: accumulate S(t) = sum_i f(w_i,t) and write
/// p(t|d) = S(t)^alpha / sum_t S(t)^alpha. Falls back to the uniform
/// distribution when every S(t) is zero; returns whether that happened.
pub(crate) fn doc_topic_dist(f: &ScoreMatrix, tokens: &[u32], alpha: f64, out: &mut [f64]) -> bool {
    out.fill(0.0);
    for &w in tokens {
        for (o, v) in out.iter_mut().zip(f.row(w)) {
            *o += v;
        }
    }
    let mut z = 0.0;
    for o in out.iter_mut() {
        *o = o.powf(alpha);
        z += *o;
    }
    if z == 0.0 {
        let uniform = 1.0 / out.len() as f64;
        out.fill(uniform);
        return true;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    false
}

/// Recompute p(t|d) for every training document from the current scores.
pub fn update_doc_topics(state: &mut ModelState, corpus: &Corpus, alpha: f64) {
    let topics = state.num_topics();
    let mut fresh = DocTopicMatrix::filled(corpus.documents.len(), topics, 0.0);
    let f = &state.f;
    fresh
        .data_mut()
        .par_chunks_exact_mut(topics)
        .zip(corpus.documents.par_iter())
        .for_each(|(row, doc)| {
            doc_topic_dist(f, &doc.tokens, alpha, row);
        });
    state.doc_topics = fresh;
}

/// Convergence test: assignments stable, scores stable, or sweep cap hit.
pub fn converged(
    sweep_result: &SweepResult,
    max_delta_f: f64,
    sweep_index: usize,
    hp: &Hyperparams,
) -> Option<ConvergenceReason> {
    if sweep_result.changed_fraction < hp.assign_change_tol {
        Some(ConvergenceReason::AssignStable)
    } else if max_delta_f < hp.score_change_tol {
        Some(ConvergenceReason::ScoreStable)
    } else if sweep_index >= hp.max_sweeps {
        Some(ConvergenceReason::MaxSweeps)
    } else {
        None
    }
}

/// Run the full training loop and finalize the model.
pub fn train(corpus: &Corpus, hp: &Hyperparams, workers: usize) -> Result<TrainingOutcome> {
    hp.validate()?;
    let workers = workers.max(1);
    if workers == 1 {
        train_inner(corpus, hp, 1)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| TkmError::Internal(format!("thread pool: {e}")))?;
        pool.install(|| train_inner(corpus, hp, workers))
    }
}

fn train_inner(corpus: &Corpus, hp: &Hyperparams, shards: usize) -> Result<TrainingOutcome> {
    let mut state = init_state(corpus, hp)?;
    let mut log = Vec::new();
    let reason = loop {
        let started = Instant::now();
        let sr = sweep(&mut state, corpus, shards);
        let su = update_scores(&mut state, corpus, hp);

        let before = state.num_topics();
        let kept = pruned_topic_set(&state, &su, hp)?;
        let mut max_delta_f = su.max_delta_f;
        if kept.len() < before {
            restrict_topics(&mut state, &kept);
            // A structural change means the model is still moving.
            max_delta_f = f64::INFINITY;
        }
        update_doc_topics(&mut state, corpus, hp.alpha);

        log.push(SweepStats {
            sweep: state.sweep_index,
            active_topics: state.num_topics(),
            changed_fraction: sr.changed_fraction,
            max_delta_f,
            elapsed_ms: started.elapsed().as_millis() as u64,
        });
        if let Some(r) = converged(&sr, max_delta_f, state.sweep_index, hp) {
            break r;
        }
    };

    let human = compute_human_scores(&state.counts, &state.con);
    let final_assignments = assign_corpus(
        &state.f,
        &state.active_topics,
        &state.doc_topics,
        corpus,
        hp.window,
        shards,
    );
    let model = TrainedModel {
        vocabulary: corpus.vocabulary.clone(),
        hyperparams: hp.clone(),
        active_topics: state.active_topics,
        f: state.f,
        f_hu: human.matrix,
        con: state.con,
        counts: state.counts,
        f_norms: state.f_norms,
        f_hu_norms: human.norms,
        meta: TrainingMeta {
            sweeps_run: state.sweep_index,
            convergence: reason,
        },
    };
    Ok(TrainingOutcome {
        model,
        log,
        final_assignments,
    })
}

/// The topic set surviving this iteration: the distinct-topic set minus any
/// degenerate topics. Degeneracy of every topic at once only happens with a
/// single active topic, which is kept with its uniform fallback scores.
fn pruned_topic_set(state: &ModelState, su: &ScoreUpdate, hp: &Hyperparams) -> Result<Vec<u32>> {
    if su.degenerate.len() == state.num_topics() {
        return Ok(state.active_topics.clone());
    }
    let dt = selfreg::distinct_topics(&state.counts, &state.active_topics, hp.gamma, hp.beta)?;
    if su.degenerate.is_empty() {
        return Ok(dt);
    }
    let kept: Vec<u32> = dt
        .iter()
        .copied()
        .filter(|t| !su.degenerate.contains(t))
        .collect();
    if kept.is_empty() {
        Ok(vec![dt[0]])
    } else {
        Ok(kept)
    }
}
