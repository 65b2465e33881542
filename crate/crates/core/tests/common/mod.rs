//! Shared test support: a brute-force assignment oracle and random
//! small-instance generators, independent of the production code paths.
//!
//! The oracle deliberately uses index loops so it reads like the assignment
//! rule it checks.
#![allow(clippy::needless_range_loop)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tkm_core::corpus::{Corpus, Document, Vocabulary};

/// Exhaustive evaluation of the windowed assignment rule: for every pair
/// (t, j in R_i) score (f(w_i,t) + f(w_j,t)) · p(t|d) and take the argmax
/// over t of the per-topic maximum, ties to the smallest topic index.
pub fn oracle_assign_token(
    f: &[Vec<f64>], // f[word][topic]
    p_td: &[f64],
    tokens: &[u32],
    i: usize,
    window: usize,
) -> usize {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(tokens.len() - 1);
    let topics = p_td.len();
    let mut best_t = 0usize;
    let mut best = f64::NEG_INFINITY;
    for t in 0..topics {
        for j in lo..=hi {
            let v = (f[tokens[i] as usize][t] + f[tokens[j] as usize][t]) * p_td[t];
            if v > best {
                best = v;
                best_t = t;
            }
        }
    }
    best_t
}

/// A random small instance: encoded corpus, normalized score matrix (nested
/// vecs), and per-document topic distributions.
pub struct RandomInstance {
    pub corpus: Corpus,
    pub f: Vec<Vec<f64>>,
    pub doc_topics: Vec<Vec<f64>>,
    pub topics: usize,
    pub window: usize,
}

pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = rng.random_range(2usize..=50);
    let topics = rng.random_range(1usize..=5);
    let ndocs = rng.random_range(1usize..=100);
    let window = rng.random_range(0usize..=3);

    let mut counts = vec![0u64; words];
    let mut documents = Vec::with_capacity(ndocs);
    let mut total_tokens = 0u64;
    for d in 0..ndocs {
        let len = rng.random_range(1usize..=30);
        let tokens: Vec<u32> = (0..len)
            .map(|_| rng.random_range(0..words as u32))
            .collect();
        for &w in &tokens {
            counts[w as usize] += 1;
        }
        total_tokens += len as u64;
        documents.push(Document {
            doc_id: d,
            tokens,
            label: None,
        });
    }
    let vocabulary =
        Vocabulary::from_entries((0..words).map(|w| (format!("w{w}"), counts[w])).collect())
            .unwrap();
    let corpus = Corpus {
        documents,
        vocabulary,
        total_tokens,
    };

    // random per-topic-normalized scores, occasionally with exact ties
    let mut f = vec![vec![0.0f64; topics]; words];
    for t in 0..topics {
        let mut z = 0.0;
        for w in 0..words {
            let v = if rng.random::<f64>() < 0.1 {
                0.25
            } else {
                rng.random::<f64>()
            };
            f[w][t] = v;
            z += v;
        }
        for w in 0..words {
            f[w][t] /= z;
        }
    }

    let mut doc_topics = Vec::with_capacity(ndocs);
    for _ in 0..ndocs {
        let mut row: Vec<f64> = (0..topics).map(|_| rng.random::<f64>() + 0.01).collect();
        let z: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= z;
        }
        doc_topics.push(row);
    }

    RandomInstance {
        corpus,
        f,
        doc_topics,
        topics,
        window,
    }
}
