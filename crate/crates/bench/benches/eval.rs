use criterion::{criterion_group, criterion_main, Criterion};
use dalsa_bench::scores;
use dalsa_core::eval::{default_grid, exact_roc, sweep_dice, sweep_roc};
use std::hint::black_box;

fn sweeps(c: &mut Criterion) {
    let (s, r) = scores(100_000);
    let grid = default_grid();
    c.bench_function("sweep_roc/100k", |b| {
        b.iter(|| sweep_roc(black_box(&s), &r, &grid).unwrap())
    });
    c.bench_function("sweep_dice/100k", |b| {
        b.iter(|| sweep_dice(black_box(&s), &r, &grid).unwrap())
    });
    c.bench_function("exact_roc/100k", |b| {
        b.iter(|| exact_roc(black_box(&s), &r).unwrap())
    });
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
