use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use eventshot_core::baseline::{kernel_matrix_with, kts_segment_with};
use eventshot_core::exec::Execution;
use eventshot_core::hygiene::{dimension_stats_with, suppress_batch, CorpusKind, HygienePolicy};
use eventshot_core::model::EmbeddingVector;
use eventshot_core::providers::mock::mock_embedding;
use eventshot_core::retrieval::similarity_matrix_with;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus(n: usize, dim: usize, tag: &str) -> Vec<EmbeddingVector> {
    (0..n)
        .map(|i| mock_embedding(format!("{tag}{i}").as_bytes(), dim, CorpusKind::Image))
        .collect()
}

fn similarity(c: &mut Criterion) {
    let phrases = corpus(9, 768, "p");
    let frames: Vec<(u64, EmbeddingVector)> = corpus(1800, 768, "f").into_iter().enumerate().map(|(i, v)| (i as u64, v)).collect();
    let mut g = c.benchmark_group("similarity_matrix_9x1800x768");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| similarity_matrix_with(black_box(&phrases), black_box(&frames), exec).unwrap())
        });
    }
    g.finish();
}

fn hygiene(c: &mut Criterion) {
    let raw = corpus(10_000, 64, "h");
    let policy = HygienePolicy::default();
    let mut g = c.benchmark_group("hygiene_10000x64");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("suppress", name), |b| {
            b.iter(|| suppress_batch(black_box(&raw), &policy, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("dimension_stats", name), |b| {
            b.iter(|| dimension_stats_with(black_box(&raw), CorpusKind::Text, 100, exec).unwrap())
        });
    }
    g.finish();
}

fn kernel_and_kts(c: &mut Criterion) {
    let feats = corpus(400, 256, "k");
    let mut g = c.benchmark_group("baseline_400x256");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("kernel", name), |b| {
            b.iter(|| kernel_matrix_with(black_box(&feats), exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("kts_m20", name), |b| {
            b.iter(|| kts_segment_with(black_box(&feats), 20, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, similarity, hygiene, kernel_and_kts);
criterion_main!(benches);
