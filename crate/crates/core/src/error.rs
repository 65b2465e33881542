//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by corpus construction, training, inference and metrics.
#[derive(Error, Debug)]
pub enum TkmError {
    /// No documents survived preprocessing, or an empty corpus was passed in.
    #[error("corpus is empty (no documents survived preprocessing)")]
    EmptyCorpus,

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    /// A probability vector failed validation (negative entry or bad sum).
    #[error("invalid probability distribution: sum = {sum}")]
    DistributionInvalid { sum: f64 },

    /// One or more topics ended up with a zero score normalizer and must be
    /// pruned before the scores can be used.
    #[error("degenerate topic(s) with zero score normalizer: {topics:?}")]
    DegenerateTopic { topics: Vec<u32> },

    #[error("topic {topic} is not active")]
    TopicInactive { topic: u32 },

    /// Smoothed word distributions need a positive prior to keep KL finite.
    #[error("beta must be > 0 for divergence computations")]
    BetaZero,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("reference corpus is empty")]
    EmptyReference,

    #[error("word {word:?} does not occur in the reference corpus")]
    UnseenWord { word: String },

    /// A versioned file (model, corpus cache, co-occurrence cache) failed to parse.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl TkmError {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        TkmError::Format {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, TkmError>;
