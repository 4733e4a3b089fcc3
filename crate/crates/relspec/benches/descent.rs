//! Parallel vs sequential throughput of the multi-start descent and the
//! sampled probes.
//!
//! Build with the default `parallel` feature so both paths are exercised;
//! `minimize_seq` is the same algorithm pinned to one thread.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use relspec::experiments::verify_weighted_norm_bound;
use relspec::{minimize, minimize_seq, Grid1D, MinimizeOptions, QuotientSpec};

fn bench_opts() -> MinimizeOptions {
    MinimizeOptions {
        max_iter: 300,
        starts: 8,
        seed: 42,
        ..Default::default()
    }
}

fn bench_minimize(c: &mut Criterion) {
    let grid = Grid1D::new(1.0, 199).unwrap();
    let q = QuotientSpec::grad_pow_mixed(3.0, 0.0).unwrap();
    let opts = bench_opts();

    let mut group = c.benchmark_group("minimize_multistart");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(minimize(&q, grid, &opts).unwrap().lambda_est))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(minimize_seq(&q, grid, &opts).unwrap().lambda_est))
    });
    group.finish();
}

fn bench_probes(c: &mut Criterion) {
    let grid = Grid1D::new(1.0, 199).unwrap();

    let mut group = c.benchmark_group("weighted_norm_probe");
    group.sample_size(10);
    group.bench_function("samples_1000", |b| {
        b.iter(|| black_box(verify_weighted_norm_bound(3.0, grid, 1000, 7).unwrap().violations))
    });
    group.finish();
}

criterion_group!(benches, bench_minimize, bench_probes);
criterion_main!(benches);
