//! Topic self-regulation: pairwise divergence of topic-word distributions
//! and the distinct-topic set used for pruning.

use rayon::prelude::*;

use crate::error::{Result, TkmError};
use crate::model::CountMatrix;

/// A beta-smoothed word distribution p(w|t) for one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWordDist {
    pub topic: u32,
    pub probs: Vec<f64>,
}

/// p(w|t) = (n(w,t) + beta) / (sum_w n(w,t) + beta·|W|).
///
/// Smoothing keeps every entry strictly positive so KL divergences stay
/// finite; beta must therefore be positive.
pub fn smoothed_word_dist(
    counts: &CountMatrix,
    ti: usize,
    topic: u32,
    beta: f64,
) -> Result<TopicWordDist> {
    if beta <= 0.0 {
        return Err(TkmError::BetaZero);
    }
    let words = counts.words();
    let total = counts.column_total(ti) as f64 + beta * words as f64;
    let probs = (0..words as u32)
        .map(|w| (counts.get(w, ti) as f64 + beta) / total)
        .collect();
    Ok(TopicWordDist { topic, probs })
}

/// Symmetrized Kullback-Leibler divergence KL(p,q) + KL(q,p), in nats.
pub fn skl(p: &TopicWordDist, q: &TopicWordDist) -> Result<f64> {
    if p.probs.len() != q.probs.len() {
        return Err(TkmError::DimensionMismatch {
            left: p.probs.len(),
            right: q.probs.len(),
        });
    }
    // SKL(p,q) = sum_w (p_w - q_w) * ln(p_w / q_w); every term is >= 0.
    let mut sum = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        sum += (a - b) * (a / b).ln();
    }
    Ok(sum)
}

/// Decide `SKL >= gamma` with early exit: terms are non-negative, so any
/// partial sum reaching gamma settles the comparison.
fn skl_at_least(p: &[f64], q: &[f64], gamma: f64) -> bool {
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        sum += (a - b) * (a / b).ln();
        if sum >= gamma {
            return true;
        }
    }
    sum >= gamma
}

/// Greedy distinct-topic selection.
///
/// Topics are visited in descending total mass (ties by ascending id); a
/// topic is kept iff its SKL to every already-kept topic is >= gamma. The
/// first-visited topic is always kept. Returns kept topic ids in ascending
/// order.
pub fn distinct_topics(
    counts: &CountMatrix,
    active_topics: &[u32],
    gamma: f64,
    beta: f64,
) -> Result<Vec<u32>> {
    assert_eq!(counts.topics(), active_topics.len());
    if active_topics.is_empty() {
        return Ok(Vec::new());
    }
    // SKL >= 0 always holds, so gamma = 0 keeps every topic.
    if gamma == 0.0 || active_topics.len() == 1 {
        return Ok(active_topics.to_vec());
    }

    let mut order: Vec<usize> = (0..active_topics.len()).collect();
    let masses: Vec<u64> = order.iter().map(|&ti| counts.column_total(ti)).collect();
    order.sort_by(|&a, &b| {
        masses[b]
            .cmp(&masses[a])
            .then(active_topics[a].cmp(&active_topics[b]))
    });

    let dists: Vec<TopicWordDist> = (0..active_topics.len())
        .map(|ti| smoothed_word_dist(counts, ti, active_topics[ti], beta))
        .collect::<Result<_>>()?;

    let mut kept: Vec<usize> = Vec::new();
    for &ti in &order {
        let distinct = kept
            .par_iter()
            .all(|&kj| skl_at_least(&dists[ti].probs, &dists[kj].probs, gamma));
        if distinct {
            kept.push(ti);
        }
    }
    let mut ids: Vec<u32> = kept.into_iter().map(|ti| active_topics[ti]).collect();
    ids.sort_unstable();
    Ok(ids)
}
