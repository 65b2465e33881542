//! Topic modeling driven by keyword scores.
//!
//! Topics are represented by per-topic-normalized keyword-score vectors
//! rather than generative word distributions. Each token is assigned the
//! topic maximizing the sum of its own score and the best score within a
//! sliding window, weighted by the document's topic distribution. Score
//! updates combine damped assignment counts with an entropy-based
//! concentration measure, and redundant topics are pruned by symmetrized KL
//! divergence, so the number of topics self-regulates below the configured
//! upper bound.
//!
//! The crate covers the full pipeline: corpus preprocessing ([`corpus`]),
//! training ([`trainer`]), score mathematics and persistence ([`model`]),
//! topic pruning ([`selfreg`]), single-pass inference ([`infer`]) and
//! evaluation metrics ([`metrics`]).

pub mod corpus;
pub mod error;
pub mod infer;
pub mod metrics;
pub mod model;
pub mod selfreg;
pub mod synthetic;
pub mod textio;
pub mod trainer;

pub use corpus::{
    build_corpus, encode_document, tokenize_and_preprocess, Corpus, Document, PreprocessOptions,
    StemmerKind, Vocabulary,
};
pub use error::{Result, TkmError};
pub use infer::{assign_unseen, export_features, infer_topics, DocTopics};
pub use metrics::{
    build_cooc_index, match_topics, model_pmi, pmi_pair, toc, CooccurrenceIndex, ModelPmi,
};
pub use model::{
    compute_human_scores, compute_keyword_scores, concentration, entropy, ConvergenceReason,
    CountMatrix, DocTopicMatrix, Hyperparams, ModelState, ScoreMatrix, TrainedModel,
};
pub use selfreg::{distinct_topics, skl, smoothed_word_dist, TopicWordDist};
pub use trainer::{
    assign_token, converged, init_state, sweep, train, update_doc_topics, update_scores,
    SweepResult, SweepStats, TokenAssignments, TrainingOutcome,
};
