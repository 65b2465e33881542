//! Shared setup for the benchmark targets.

use tkm_core::synthetic::{planted_corpus, PlantedCorpusSpec};
use tkm_core::trainer::init_state;
use tkm_core::{Corpus, Hyperparams, ModelState};

pub fn bench_corpus(docs: usize) -> Corpus {
    planted_corpus(&PlantedCorpusSpec {
        docs,
        seed: 33,
        ..PlantedCorpusSpec::default()
    })
}

pub fn bench_state(corpus: &Corpus, k: usize, window: usize) -> ModelState {
    let hp = Hyperparams {
        k,
        window,
        seed: 5,
        ..Hyperparams::default()
    };
    init_state(corpus, &hp).expect("corpus is non-empty")
}
