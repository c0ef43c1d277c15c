use std::hint::black_box;
use std::time::Duration;

use ccmv_core::padm::padm_x_step;
use ccmv_core::{
    build_factorization, ccmv_padm_solve, ccmv_pd_solve, make_feasible_point, padm_y_step,
    synthetic, x_step, y_step, SolverConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const SEED: u64 = 2024;

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("steps");
    for n in [50usize, 226, 476] {
        let spec = synthetic::factor_model(n, 10, 0.5, SEED).unwrap();
        let fact = build_factorization(&spec, 10.0).unwrap();
        let y = make_feasible_point(&spec);
        let x = x_step(&fact, &spec, &y).unwrap();
        group.bench_with_input(BenchmarkId::new("x_step", n), &n, |b, _| {
            b.iter(|| x_step(&fact, &spec, black_box(&y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("y_step", n), &n, |b, _| {
            b.iter(|| y_step(black_box(&x), 10))
        });
        group.bench_with_input(BenchmarkId::new("factorization", n), &n, |b, _| {
            b.iter(|| build_factorization(&spec, black_box(10.0)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("padm_y_step", n), &n, |b, _| {
            b.iter(|| padm_y_step(black_box(&x), 10))
        });
        if n <= 226 {
            group.bench_with_input(BenchmarkId::new("padm_x_step", n), &n, |b, _| {
                b.iter(|| padm_x_step(&spec, 1.0, black_box(&y), 1e-6).unwrap())
            });
        }
    }
    group.finish();
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(10));
    let cfg = SolverConfig::default();
    for n in [226usize, 476] {
        let spec = synthetic::factor_model(n, 10, 0.5, SEED).unwrap();
        group.bench_with_input(BenchmarkId::new("pd", n), &n, |b, _| {
            b.iter(|| ccmv_pd_solve(black_box(&spec), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("padm", n), &n, |b, _| {
            b.iter(|| ccmv_padm_solve(black_box(&spec), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, steps, solves);
criterion_main!(benches);
