//! Microbenchmarks for the distance kernel and the three constructions.
//!
//! Run with `cargo bench -p spancore-bench`. The sizes are deliberately
//! desk-scale; the interesting comparison is the spectral selection against
//! the composed pipeline at equal output size.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spancore::bench::{synth, SynthKind};
use spancore::cnw::cnw;
use spancore::coreset::{fixed_size_coreset, line_collapse, uniform_coreset};
use spancore::points::WeightedPointSet;
use spancore::seeding::sample_line_seeds;
use spancore::svd::opt_single_subspace;
use std::hint::black_box;

fn structured(n: usize, d: usize) -> WeightedPointSet {
    let set = synth(SynthKind::Lines, n, d, 24, 1, 1e-3, 7).unwrap();
    set.drop_zero_rows().0
}

fn bench_line_metric(c: &mut Criterion) {
    let set = structured(1000, 128);
    let rows: Vec<Vec<f64>> = (0..set.len()).map(|i| set.dense_row(i)).collect();
    c.bench_function("line_metric/d128", |b| {
        let mut i = 0usize;
        b.iter(|| {
            i = (i + 1) % (rows.len() - 1);
            black_box(spancore::geometry::line_metric(&rows[i], &rows[i + 1]).unwrap())
        })
    });
}

fn bench_seeding(c: &mut Criterion) {
    let mut group = c.benchmark_group("line_seeding");
    for &n in &[500usize, 1000, 2000] {
        let set = structured(n, 64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, set| {
            b.iter(|| black_box(sample_line_seeds(set, &[], 20, 3).unwrap()))
        });
    }
    group.finish();
}

fn bench_collapse(c: &mut Criterion) {
    let set = structured(1000, 128);
    let opt = opt_single_subspace(&set, 5).unwrap();
    c.bench_function("line_collapse/n1000_d128", |b| {
        b.iter(|| black_box(line_collapse(&set, 0.1 * opt, 5).unwrap()))
    });
}

fn bench_constructions(c: &mut Criterion) {
    let set = structured(1000, 128);
    let k = 5usize;
    let opt = opt_single_subspace(&set, k).unwrap();
    let mut group = c.benchmark_group("coreset_build");
    group.sample_size(10);
    for &size in &[100usize, 400] {
        group.bench_with_input(BenchmarkId::new("uniform", size), &size, |b, &m| {
            b.iter(|| black_box(uniform_coreset(&set, m, 1).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("cnw", size), &size, |b, &m| {
            let eps = (k as f64 / m as f64).sqrt();
            b.iter(|| black_box(cnw(&set, k, eps).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("composed", size), &size, |b, &m| {
            let eps = (4.0 * k as f64 / m as f64).sqrt();
            b.iter(|| black_box(fixed_size_coreset(&set, k, k, eps, opt, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_line_metric,
    bench_seeding,
    bench_collapse,
    bench_constructions
);
criterion_main!(benches);
