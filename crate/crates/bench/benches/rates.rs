use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qmimo::channel::{compose_channel, sample_fast_fading};
use qmimo::quantizer::{design_lloyd_max, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use qmimo::rate::{approx_sum_rate, ergodic_rate_mc, MrcTerms};

fn lloyd_max(c: &mut Criterion) {
    let mut g = c.benchmark_group("lloyd_max");
    for b in [1u32, 4, 8, 12] {
        g.bench_with_input(BenchmarkId::from_parameter(b), &b, |bench, &b| {
            bench.iter(|| design_lloyd_max(black_box(b), DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap())
        });
    }
    g.finish();
}

fn mrc_terms(c: &mut Criterion) {
    let betas: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
    let mut g = c.benchmark_group("mrc_terms");
    for m in [32usize, 128, 512] {
        let ch = compose_channel(sample_fast_fading(m, 10, 1).unwrap(), &betas).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), ch.g(), |bench, g| {
            bench.iter(|| MrcTerms::new(black_box(g), 10.0).unwrap().rates(0.8825))
        });
    }
    g.finish();
}

fn ergodic(c: &mut Criterion) {
    let betas: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
    let mut g = c.benchmark_group("ergodic_rate_mc");
    g.sample_size(10);
    g.bench_function("M128_N10_1000trials", |bench| {
        bench.iter(|| ergodic_rate_mc(black_box(&betas), 128, 10.0, 0.8825, 1000, 1).unwrap())
    });
    g.finish();
    c.bench_function("approx_sum_rate_N10", |bench| {
        bench.iter(|| approx_sum_rate(black_box(&betas), 128, 10.0, 0.8825).unwrap())
    });
}

criterion_group!(benches, lloyd_max, mrc_terms, ergodic);
criterion_main!(benches);
