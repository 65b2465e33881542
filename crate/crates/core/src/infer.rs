//! Single-pass topic inference for unseen documents and feature export.
//!
//! Inference first aggregates keyword scores into p(t|d), then optionally
//! runs the windowed assignment once with that distribution. Documents are
//! processed exactly once; the model is immutable throughout.

use std::io::Write;

use crate::error::Result;
use crate::model::TrainedModel;
use crate::textio::{csv_field, fmt_f64};
use crate::trainer::{assign_document, doc_topic_dist, WindowMax};

/// Inferred topic distribution for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopics {
    pub doc_id: usize,
    /// p(t|d) over the model's active topics, in their stored order.
    pub dist: Vec<f64>,
    /// True when the document had no usable tokens and the distribution fell
    /// back to uniform.
    pub fallback_uniform: bool,
}

/// Infer p(t|d) for an encoded token sequence in a single pass.
///
/// An empty (or fully out-of-vocabulary) sequence yields the uniform
/// distribution with `fallback_uniform` set.
pub fn infer_topics(model: &TrainedModel, tokens: &[u32], doc_id: usize) -> DocTopics {
    let mut dist = vec![0.0; model.num_topics()];
    let fallback = doc_topic_dist(&model.f, tokens, model.hyperparams.alpha, &mut dist);
    DocTopics {
        doc_id,
        dist,
        fallback_uniform: fallback,
    }
}

/// Assign each token its most likely topic using the model scores and the
/// inferred document distribution — the same windowed argmax as training.
/// Returns topic ids, one per token.
pub fn assign_unseen(model: &TrainedModel, tokens: &[u32], doc_topics: &DocTopics) -> Vec<u32> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let topics = model.num_topics();
    let window = model.hyperparams.window;
    let mut wm = WindowMax::new(topics, window, tokens.len());
    let mut out = vec![0u32; tokens.len()];
    assign_document(
        &model.f,
        &doc_topics.dist,
        tokens,
        window,
        &mut wm,
        &mut out,
    );
    for ti in out.iter_mut() {
        *ti = model.active_topics[*ti as usize];
    }
    out
}

/// Write one CSV row per document: doc_id, label, then p(t|d) for each
/// active topic in ascending topic-id order. Floats carry 17 significant
/// digits so the file round-trips exactly.
pub fn export_features<W: Write, I>(model: &TrainedModel, docs: I, mut out: W) -> Result<()>
where
    I: IntoIterator<Item = (usize, Option<String>, Vec<u32>)>,
{
    write!(out, "doc_id,label")?;
    for &t in &model.active_topics {
        write!(out, ",t{t}")?;
    }
    writeln!(out)?;
    for (doc_id, label, tokens) in docs {
        let dt = infer_topics(model, &tokens, doc_id);
        write!(
            out,
            "{doc_id},{}",
            csv_field(label.as_deref().unwrap_or(""))
        )?;
        for v in &dt.dist {
            write!(out, ",{}", fmt_f64(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
