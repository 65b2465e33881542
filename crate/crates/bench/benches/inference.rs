//! Single-pass inference cost per document.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use tkm_bench::bench_corpus;
use tkm_core::{assign_unseen, infer_topics, train, Hyperparams};

fn infer_documents(c: &mut Criterion) {
    let corpus = bench_corpus(500);
    let hp = Hyperparams {
        k: 30,
        seed: 5,
        max_sweeps: 30,
        ..Hyperparams::default()
    };
    let model = train(&corpus, &hp, 2).expect("training").model;

    let mut group = c.benchmark_group("inference");
    group.throughput(Throughput::Elements(corpus.total_tokens));
    group.bench_function("distributions", |b| {
        b.iter(|| {
            for doc in &corpus.documents {
                std::hint::black_box(infer_topics(&model, &doc.tokens, doc.doc_id));
            }
        });
    });
    group.bench_function("distributions_and_assignments", |b| {
        b.iter(|| {
            for doc in &corpus.documents {
                let dt = infer_topics(&model, &doc.tokens, doc.doc_id);
                std::hint::black_box(assign_unseen(&model, &doc.tokens, &dt));
            }
        });
    });
    group.finish();
}

criterion_group!(benches, infer_documents);
criterion_main!(benches);
