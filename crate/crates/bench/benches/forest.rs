use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dalsa_bench::forest_table;
use dalsa_core::forest::{train_forest, ForestParams};
use std::hint::black_box;

fn train(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_forest");
    group.sample_size(10);
    for n in [1_000usize, 10_000] {
        let table = forest_table(n, 4, 3);
        let params = ForestParams {
            n_trees: 50,
            max_depth: 8,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| train_forest(black_box(&table), &params).unwrap())
        });
    }
    group.finish();
}

fn predict(c: &mut Criterion) {
    let table = forest_table(20_000, 4, 4);
    let forest = train_forest(
        &table,
        &ForestParams {
            n_trees: 100,
            max_depth: 8,
            ..Default::default()
        },
    )
    .unwrap();
    c.bench_function("forest_votes/20k", |b| {
        b.iter(|| forest.votes(black_box(&table)).unwrap())
    });
}

criterion_group!(benches, train, predict);
criterion_main!(benches);
