use advchan::capacity::{p0_solve, upper_bound_flip_closed, upper_bound_flip_numeric};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

fn bounds(c: &mut Criterion) {
    c.bench_function("flip_upper_numeric", |b| {
        b.iter(|| upper_bound_flip_numeric(black_box(0.12), black_box(0.1), 1e-9).unwrap())
    });
    c.bench_function("flip_upper_closed", |b| {
        b.iter(|| upper_bound_flip_closed(black_box(0.12), black_box(0.1)).unwrap())
    });
    c.bench_function("p0_solve", |b| {
        b.iter(|| p0_solve(black_box(0.2), 1e-12).unwrap())
    });
}

criterion_group!(benches, bounds);
criterion_main!(benches);
