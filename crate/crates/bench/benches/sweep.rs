//! Per-sweep cost along its three scaling axes: window half-width, corpus
//! size and topic bound. The window axis should stay nearly flat thanks to
//! the monotone-deque sliding maximum.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tkm_bench::{bench_corpus, bench_state};
use tkm_core::trainer::sweep;

fn sweep_vs_window(c: &mut Criterion) {
    let corpus = bench_corpus(500);
    let mut group = c.benchmark_group("sweep_window");
    group.throughput(Throughput::Elements(corpus.total_tokens));
    for window in [0usize, 3, 7, 14, 28] {
        let mut state = bench_state(&corpus, 30, window);
        group.bench_with_input(BenchmarkId::from_parameter(window), &window, |b, _| {
            b.iter(|| sweep(&mut state, &corpus, 1));
        });
    }
    group.finish();
}

fn sweep_vs_corpus(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_corpus");
    for docs in [250usize, 500, 1000, 2000] {
        let corpus = bench_corpus(docs);
        let mut state = bench_state(&corpus, 30, 7);
        group.throughput(Throughput::Elements(corpus.total_tokens));
        group.bench_with_input(BenchmarkId::from_parameter(docs), &docs, |b, _| {
            b.iter(|| sweep(&mut state, &corpus, 1));
        });
    }
    group.finish();
}

fn sweep_vs_topics(c: &mut Criterion) {
    let corpus = bench_corpus(500);
    let mut group = c.benchmark_group("sweep_topics");
    group.throughput(Throughput::Elements(corpus.total_tokens));
    for k in [10usize, 25, 50, 100] {
        let mut state = bench_state(&corpus, k, 7);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| sweep(&mut state, &corpus, 1));
        });
    }
    group.finish();
}

fn sweep_vs_shards(c: &mut Criterion) {
    let corpus = bench_corpus(2000);
    let mut group = c.benchmark_group("sweep_shards");
    group.throughput(Throughput::Elements(corpus.total_tokens));
    for shards in [1usize, 2, 4] {
        let mut state = bench_state(&corpus, 30, 7);
        group.bench_with_input(BenchmarkId::from_parameter(shards), &shards, |b, _| {
            b.iter(|| sweep(&mut state, &corpus, shards));
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    sweep_vs_window,
    sweep_vs_corpus,
    sweep_vs_topics,
    sweep_vs_shards
);
criterion_main!(benches);
