use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use srwlab_bench::BENCH_HORIZONS;
use srwlab_core::constants::{compute_gamma, DimensionConstants};
use srwlab_core::lattice::Walker;
use srwlab_core::rate::{enumerate_scaled_lattice, solve_boundary, RateSet, RateSetDescriptor};
use srwlab_core::{TallyBoard, WalkConfig};

fn walk(c: &mut Criterion) {
    let mut group = c.benchmark_group("walk");
    for n in BENCH_HORIZONS {
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::new("steps", n), &n, |b, &n| {
            b.iter(|| {
                let mut w = Walker::new(3, 1, 0);
                for _ in 0..n {
                    black_box(w.step());
                }
            })
        });
    }
    group.finish();
}

fn tally(c: &mut Criterion) {
    let mut group = c.benchmark_group("tally");
    group.sample_size(10);
    for n in BENCH_HORIZONS {
        let config = WalkConfig::new(3, n, 1, 0).unwrap();
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::new("local_times", n), &config, |b, cfg| {
            b.iter(|| TallyBoard::from_walk_fast(cfg).unwrap().summary())
        });
        group.bench_with_input(BenchmarkId::new("with_new_points", n), &config, |b, cfg| {
            b.iter(|| TallyBoard::from_walk(cfg).unwrap().summary())
        });
    }
    group.finish();
}

fn gamma(c: &mut Criterion) {
    let mut group = c.benchmark_group("gamma");
    group.sample_size(10);
    for d in [3usize, 4, 5] {
        group.bench_with_input(BenchmarkId::new("quadrature", d), &d, |b, &d| {
            b.iter(|| compute_gamma(d, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn boundary(c: &mut Criterion) {
    let constants = DimensionConstants::compute(3).unwrap();
    let mut group = c.benchmark_group("boundary");
    for set in [RateSet::B, RateSet::D] {
        let desc = RateSetDescriptor::new(set, constants.clone());
        group.bench_function(BenchmarkId::new("grid_200", set), |b| {
            b.iter(|| {
                (0..200)
                    .map(|i| solve_boundary(&desc, desc.x_max() * i as f64 / 199.0, 1e-12).unwrap())
                    .collect::<Vec<_>>()
            })
        });
        group.bench_function(BenchmarkId::new("enumerate_scale_100", set), |b| {
            b.iter(|| enumerate_scaled_lattice(&desc, 100.0).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, walk, tally, gamma, boundary);
criterion_main!(benches);
