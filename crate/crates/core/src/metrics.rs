//! Evaluation metrics: PMI topic coherence against an external reference
//! corpus, topic-change probability, and cosine topic matching.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Result, TkmError};
use crate::infer::{assign_unseen, infer_topics};
use crate::model::{ScoreMatrix, TrainedModel};
use crate::textio::parse_u64;

/// Document frequencies and pair document frequencies over an external
/// reference corpus, restricted to a declared word set.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceIndex {
    num_docs: u64,
    words: Vec<String>,
    word_idx: HashMap<String, u32>,
    df: Vec<u64>,
    /// Keyed by (lower index, higher index).
    pair_df: HashMap<(u32, u32), u64>,
}

impl CooccurrenceIndex {
    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn df(&self, word: &str) -> u64 {
        match self.word_idx.get(word) {
            Some(&i) => self.df[i as usize],
            None => 0,
        }
    }

    pub fn pair_df(&self, a: &str, b: &str) -> u64 {
        let (Some(&i), Some(&j)) = (self.word_idx.get(a), self.word_idx.get(b)) else {
            return 0;
        };
        let key = if i <= j { (i, j) } else { (j, i) };
        self.pair_df.get(&key).copied().unwrap_or(0)
    }

    const MAGIC: &'static str = "TKMCOOC 1";

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::MAGIC)?;
        writeln!(w, "numdocs {}", self.num_docs)?;
        for (i, word) in self.words.iter().enumerate() {
            writeln!(w, "df {word} {}", self.df[i])?;
        }
        let mut pairs: Vec<(&(u32, u32), &u64)> = self.pair_df.iter().collect();
        pairs.sort();
        for (&(i, j), &count) in pairs {
            writeln!(
                w,
                "pdf {} {} {count}",
                self.words[i as usize], self.words[j as usize]
            )?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<CooccurrenceIndex> {
        let mut lines = reader.lines().enumerate();
        let (ln, magic) = match lines.next() {
            Some((i, line)) => (i + 1, line?),
            None => return Err(TkmError::format(0, "empty file")),
        };
        if magic != Self::MAGIC {
            return Err(TkmError::format(ln, format!("expected {:?}", Self::MAGIC)));
        }
        let (ln, header) = match lines.next() {
            Some((i, line)) => (i + 1, line?),
            None => return Err(TkmError::format(0, "missing numdocs")),
        };
        let num_docs = match header.strip_prefix("numdocs ") {
            Some(n) => parse_u64(n, ln)?,
            None => return Err(TkmError::format(ln, "expected numdocs header")),
        };
        let mut index = CooccurrenceIndex {
            num_docs,
            words: Vec::new(),
            word_idx: HashMap::new(),
            df: Vec::new(),
            pair_df: HashMap::new(),
        };
        for item in lines {
            let (i, line) = item;
            let ln = i + 1;
            let line = line?;
            let fields: Vec<&str> = line.split(' ').collect();
            match fields.as_slice() {
                ["df", word, count] => {
                    if index.word_idx.contains_key(*word) {
                        return Err(TkmError::format(ln, format!("duplicate word {word:?}")));
                    }
                    index
                        .word_idx
                        .insert(word.to_string(), index.words.len() as u32);
                    index.words.push(word.to_string());
                    index.df.push(parse_u64(count, ln)?);
                }
                ["pdf", a, b, count] => {
                    let ia = *index
                        .word_idx
                        .get(*a)
                        .ok_or_else(|| TkmError::format(ln, format!("unknown word {a:?}")))?;
                    let ib = *index
                        .word_idx
                        .get(*b)
                        .ok_or_else(|| TkmError::format(ln, format!("unknown word {b:?}")))?;
                    let key = if ia <= ib { (ia, ib) } else { (ib, ia) };
                    index.pair_df.insert(key, parse_u64(count, ln)?);
                }
                _ => return Err(TkmError::format(ln, "expected df or pdf line")),
            }
        }
        index.validate()?;
        Ok(index)
    }

    fn validate(&self) -> Result<()> {
        for (&(i, j), &pdf) in &self.pair_df {
            let bound = self.df[i as usize].min(self.df[j as usize]);
            if pdf > bound || bound > self.num_docs {
                return Err(TkmError::format(
                    0,
                    format!(
                        "pair_df({}, {}) = {pdf} exceeds df bound {bound}",
                        self.words[i as usize], self.words[j as usize]
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Build the index in one streaming pass. Each item of `docs` is one
/// reference document, already tokenized; words outside `words` are ignored
/// and duplicate occurrences within a document count once.
pub fn build_cooc_index<I, D>(docs: I, words: &HashSet<String>) -> Result<CooccurrenceIndex>
where
    I: IntoIterator<Item = D>,
    D: IntoIterator<Item = String>,
{
    let mut declared: Vec<String> = words.iter().cloned().collect();
    declared.sort();
    let word_idx: HashMap<String, u32> = declared
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    let mut df = vec![0u64; declared.len()];
    let mut pair_df: HashMap<(u32, u32), u64> = HashMap::new();
    let mut num_docs = 0u64;
    let mut present: Vec<u32> = Vec::new();
    for doc in docs {
        num_docs += 1;
        present.clear();
        for token in doc {
            if let Some(&i) = word_idx.get(&token) {
                present.push(i);
            }
        }
        present.sort_unstable();
        present.dedup();
        for (a, &i) in present.iter().enumerate() {
            df[i as usize] += 1;
            for &j in &present[a + 1..] {
                *pair_df.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    if num_docs == 0 {
        return Err(TkmError::EmptyReference);
    }
    let index = CooccurrenceIndex {
        num_docs,
        words: declared,
        word_idx,
        df,
        pair_df,
    };
    index.validate()?;
    Ok(index)
}

/// Pointwise mutual information of two words over the reference corpus, in
/// nats. A zero co-occurrence count is floored at one document so the pair
/// stays comparable instead of diverging.
pub fn pmi_pair(index: &CooccurrenceIndex, a: &str, b: &str) -> Result<f64> {
    let dfa = index.df(a);
    if dfa == 0 {
        return Err(TkmError::UnseenWord {
            word: a.to_string(),
        });
    }
    let dfb = index.df(b);
    if dfb == 0 {
        return Err(TkmError::UnseenWord {
            word: b.to_string(),
        });
    }
    let n = index.num_docs() as f64;
    let joint = index.pair_df(a, b).max(1) as f64 / n;
    let pa = dfa as f64 / n;
    let pb = dfb as f64 / n;
    Ok((joint / (pa * pb)).ln())
}

/// PMI coherence of one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicPmi {
    pub topic: u32,
    /// Median pairwise PMI of the topic's top words; 0.0 when flagged.
    pub score: f64,
    /// True when every pair was skipped for unseen words.
    pub all_pairs_unseen: bool,
}

/// Model-level PMI report.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPmi {
    /// Arithmetic mean over active topics.
    pub score: f64,
    pub topics: Vec<TopicPmi>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Per-topic median PMI over all unordered pairs of the ten highest-ranked
/// words (by f_hu), averaged over topics. Pairs containing a word unseen in
/// the reference are skipped; a topic with no usable pair scores 0 and is
/// flagged.
pub fn model_pmi(model: &TrainedModel, index: &CooccurrenceIndex) -> Result<ModelPmi> {
    const TOP_WORDS: usize = 10;
    let mut topics = Vec::with_capacity(model.num_topics());
    let mut total = 0.0;
    for &t in &model.active_topics {
        let top = model.top_words(t, TOP_WORDS)?;
        let mut pair_scores = Vec::new();
        for (i, &(wa, _)) in top.iter().enumerate() {
            for &(wb, _) in &top[i + 1..] {
                let a = model.vocabulary.word(wa);
                let b = model.vocabulary.word(wb);
                match pmi_pair(index, a, b) {
                    Ok(v) => pair_scores.push(v),
                    Err(TkmError::UnseenWord { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        pair_scores.sort_by(|x, y| x.partial_cmp(y).expect("pmi values are finite"));
        let (score, flagged) = if pair_scores.is_empty() {
            (0.0, true)
        } else {
            (median(&pair_scores), false)
        };
        total += score;
        topics.push(TopicPmi {
            topic: t,
            score,
            all_pairs_unseen: flagged,
        });
    }
    let score = if topics.is_empty() {
        0.0
    } else {
        total / topics.len() as f64
    };
    Ok(ModelPmi { score, topics })
}

/// Topic-change probability: the fraction of consecutive token pairs whose
/// assigned topics differ, with the total token count as the denominator.
/// Assignments are produced by single-pass inference with the given model.
pub fn toc<'a, I>(model: &TrainedModel, docs: I) -> f64
where
    I: IntoIterator<Item = &'a [u32]>,
{
    let mut changes = 0u64;
    let mut tokens = 0u64;
    for (doc_id, doc) in docs.into_iter().enumerate() {
        tokens += doc.len() as u64;
        if doc.len() < 2 {
            continue;
        }
        let dt = infer_topics(model, doc, doc_id);
        let assigned = assign_unseen(model, doc, &dt);
        for pair in assigned.windows(2) {
            if pair[0] != pair[1] {
                changes += 1;
            }
        }
    }
    if tokens == 0 {
        return 0.0;
    }
    changes as f64 / tokens as f64
}

/// Count topic changes over precomputed per-token assignments (same formula
/// as [`toc`], useful for training assignments).
pub fn toc_from_assignments<'a, I>(assignments: I) -> f64
where
    I: IntoIterator<Item = &'a [u32]>,
{
    let mut changes = 0u64;
    let mut tokens = 0u64;
    for doc in assignments {
        tokens += doc.len() as u64;
        for pair in doc.windows(2) {
            if pair[0] != pair[1] {
                changes += 1;
            }
        }
    }
    if tokens == 0 {
        return 0.0;
    }
    changes as f64 / tokens as f64
}

/// A matched pair of topics with its cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicMatch {
    /// Column index into the first matrix.
    pub a: usize,
    /// Column index into the second matrix.
    pub b: usize,
    pub similarity: f64,
}

/// Greedily pair topics of two score matrices over the same vocabulary by
/// descending cosine similarity of their word-score columns.
pub fn match_topics(a: &ScoreMatrix, b: &ScoreMatrix) -> Result<Vec<TopicMatch>> {
    if a.words() != b.words() {
        return Err(TkmError::DimensionMismatch {
            left: a.words(),
            right: b.words(),
        });
    }
    let na = a.topics();
    let nb = b.topics();
    let mut sims = vec![0.0f64; na * nb];
    let mut dot = vec![0.0f64; na * nb];
    let mut norm_a = vec![0.0f64; na];
    let mut norm_b = vec![0.0f64; nb];
    for w in 0..a.words() as u32 {
        let ra = a.row(w);
        let rb = b.row(w);
        for (i, &va) in ra.iter().enumerate() {
            norm_a[i] += va * va;
            for (j, &vb) in rb.iter().enumerate() {
                dot[i * nb + j] += va * vb;
            }
        }
        for (j, &vb) in rb.iter().enumerate() {
            norm_b[j] += vb * vb;
        }
    }
    for i in 0..na {
        for j in 0..nb {
            let denom = norm_a[i].sqrt() * norm_b[j].sqrt();
            sims[i * nb + j] = if denom == 0.0 {
                0.0
            } else {
                dot[i * nb + j] / denom
            };
        }
    }

    let mut used_a = vec![false; na];
    let mut used_b = vec![false; nb];
    let mut matches = Vec::with_capacity(na.min(nb));
    for _ in 0..na.min(nb) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = (0usize, 0usize);
        for i in 0..na {
            if used_a[i] {
                continue;
            }
            for j in 0..nb {
                if used_b[j] {
                    continue;
                }
                if sims[i * nb + j] > best {
                    best = sims[i * nb + j];
                    arg = (i, j);
                }
            }
        }
        used_a[arg.0] = true;
        used_b[arg.1] = true;
        matches.push(TopicMatch {
            a: arg.0,
            b: arg.1,
            similarity: best,
        });
    }
    Ok(matches)
}
