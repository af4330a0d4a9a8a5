use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use goflab_bench::fixture;
use goflab_core::ghl::{central_matrix, ghl_test};
use goflab_core::hl::hl_test;
use goflab_core::logistic::{fit_logistic, FitOptions};
use goflab_core::simulate::run_realization;
use goflab_core::stats::chi2_sf;
use std::hint::black_box;

const DIMS: [usize; 3] = [2, 10, 25];

fn fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_logistic");
    for d in DIMS {
        let f = fixture(50, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &f, |b, f| {
            b.iter(|| fit_logistic(black_box(&f.data), &FitOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn tests(c: &mut Criterion) {
    let mut group = c.benchmark_group("statistics");
    for d in DIMS {
        let f = fixture(50, d);
        group.bench_with_input(BenchmarkId::new("central_matrix", d), &f, |b, f| {
            b.iter(|| central_matrix(&f.model, &f.data, &f.grouping).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("hl", d), &f, |b, f| {
            b.iter(|| hl_test(&f.model, &f.data, &f.grouping).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ghl", d), &f, |b, f| {
            b.iter(|| ghl_test(&f.model, &f.data, &f.grouping).unwrap())
        });
    }
    group.finish();
}

fn realization(c: &mut Criterion) {
    let mut group = c.benchmark_group("realization");
    for d in DIMS {
        let scenario = fixture(50, d).scenario;
        group.bench_with_input(BenchmarkId::from_parameter(d), &scenario, |b, s| {
            b.iter(|| run_realization(s, black_box(1)))
        });
    }
    group.finish();
}

fn tail(c: &mut Criterion) {
    c.bench_function("chi2_sf", |b| {
        b.iter(|| chi2_sf(black_box(15.507), black_box(8)))
    });
}

criterion_group!(benches, fit, tests, realization, tail);
criterion_main!(benches);
