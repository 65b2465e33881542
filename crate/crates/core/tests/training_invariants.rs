//! Cross-module consistency of the finished model: inference must agree
//! with the final training state.

use tkm_core::metrics::toc_from_assignments;
use tkm_core::synthetic::{planted_corpus, PlantedCorpusSpec};
use tkm_core::trainer::{init_state, update_doc_topics};
use tkm_core::{infer_topics, toc, train, Hyperparams};

fn trained() -> (tkm_core::Corpus, Hyperparams, tkm_core::TrainingOutcome) {
    let corpus = planted_corpus(&PlantedCorpusSpec {
        docs: 300,
        topics: 5,
        ..PlantedCorpusSpec::default()
    });
    let hp = Hyperparams {
        k: 12,
        seed: 21,
        ..Hyperparams::default()
    };
    let out = train(&corpus, &hp, 2).unwrap();
    (corpus, hp, out)
}

/// The last training update computed p(t|d) from the final scores; running
/// single-pass inference with the same scores must reproduce it exactly.
#[test]
fn inference_reproduces_training_doc_distributions() {
    let (corpus, hp, out) = trained();
    let mut state = init_state(&corpus, &hp).unwrap();
    state.f = out.model.f.clone();
    state.active_topics = out.model.active_topics.clone();
    update_doc_topics(&mut state, &corpus, hp.alpha);
    for doc in &corpus.documents {
        let dt = infer_topics(&out.model, &doc.tokens, doc.doc_id);
        let stored = state.doc_topics.row(doc.doc_id);
        assert_eq!(dt.dist.len(), stored.len());
        for (a, b) in dt.dist.iter().zip(stored) {
            assert_eq!(a.to_bits(), b.to_bits(), "doc {}", doc.doc_id);
        }
    }
}

#[test]
fn final_assignment_toc_equals_reassignment_toc() {
    let (corpus, _, out) = trained();
    let from_training =
        toc_from_assignments((0..corpus.documents.len()).map(|d| out.final_assignments.doc(d)));
    let from_inference = toc(
        &out.model,
        corpus.documents.iter().map(|d| d.tokens.as_slice()),
    );
    assert_eq!(
        from_training.to_bits(),
        from_inference.to_bits(),
        "training-pass ToC {from_training} != re-assignment ToC {from_inference}"
    );
}
