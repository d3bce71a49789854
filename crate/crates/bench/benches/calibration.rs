use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use simcal::calibrators::{fit_beta, fit_isotonic, fit_sigmoid, pava};
use simcal::density::{kde_1d, silverman_bandwidth, uniform_grid};
use simcal::invariance::run_suite;
use simcal::metrics::evaluate_all;
use simcal::synth::sts_like_pairs;

fn isotonic(c: &mut Criterion) {
    let mut group = c.benchmark_group("isotonic");
    for n in [1_000, 5_749, 20_000] {
        let pairs = sts_like_pairs(n, 1);
        let y: Vec<f64> = pairs.iter().map(|p| p.human_score).collect();
        let w = vec![1.0; n];
        group.bench_with_input(BenchmarkId::new("pava", n), &n, |b, _| b.iter(|| pava(black_box(&y), &w)));
        group.bench_with_input(BenchmarkId::new("fit", n), &n, |b, _| b.iter(|| fit_isotonic(black_box(&pairs))));
    }
    group.finish();
}

fn parametric(c: &mut Criterion) {
    let pairs = sts_like_pairs(1_500, 2);
    let mut group = c.benchmark_group("parametric");
    group.sample_size(10);
    group.bench_function("sigmoid", |b| b.iter(|| fit_sigmoid(black_box(&pairs))));
    group.bench_function("beta", |b| b.iter(|| fit_beta(black_box(&pairs))));
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let pairs = sts_like_pairs(5_749, 3);
    c.bench_function("evaluate_all/5749", |b| b.iter(|| evaluate_all(black_box(&pairs), 10)));
}

fn density(c: &mut Criterion) {
    let xs: Vec<f64> = sts_like_pairs(5_749, 4).iter().map(|p| p.model_score).collect();
    let h = silverman_bandwidth(&xs).unwrap();
    let grid = uniform_grid(-1.0, 1.0, 512);
    c.bench_function("kde_1d/5749x512", |b| b.iter(|| kde_1d(black_box(&xs), &grid, h)));
}

fn invariance(c: &mut Criterion) {
    let model = fit_isotonic(&sts_like_pairs(2_000, 5)).unwrap();
    let mut group = c.benchmark_group("invariance");
    group.sample_size(10);
    group.bench_function("run_suite/10000", |b| b.iter(|| run_suite(black_box(&model), 7, 10_000)));
    group.finish();
}

criterion_group!(benches, isotonic, parametric, metrics, density, invariance);
criterion_main!(benches);
