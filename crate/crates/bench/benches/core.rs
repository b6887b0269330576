use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mbonacci::chain::{density_scan, Chain};
use mbonacci::frame::{extreme_eigenvalues, gram_matrix, ExtendedGram};
use mbonacci::numbersys::verify_gap_condition;
use mbonacci::spectral::{perron_root, perron_root_extended, DEFAULT_TOLERANCE};
use mbonacci::substitution::{Alphabet, WordStream};

fn words(c: &mut Criterion) {
    let mut g = c.benchmark_group("word");
    for m in [2usize, 3, 8] {
        g.bench_with_input(BenchmarkId::new("prefix_1e6", m), &m, |b, &m| {
            let a = Alphabet::new(m).unwrap();
            b.iter(|| WordStream::with_window(a, 0, black_box(1_000_000)))
        });
    }
    g.finish();
}

fn perron(c: &mut Criterion) {
    let mut g = c.benchmark_group("perron");
    for m in [2usize, 12, 30] {
        g.bench_with_input(BenchmarkId::new("double", m), &m, |b, &m| {
            b.iter(|| perron_root(black_box(m), DEFAULT_TOLERANCE))
        });
    }
    g.bench_function("extended_m60_100_digits", |b| {
        b.iter(|| perron_root_extended(black_box(60), 100))
    });
    g.finish();
}

fn chains(c: &mut Criterion) {
    let chain = Chain::build(2, 0, 20_000).unwrap();
    c.bench_function("density_scan_250_500", |b| {
        b.iter(|| density_scan(&chain, 250.0, 500.0, black_box(1.0)))
    });
    let chain = Chain::build(3, -100_000, 100_200).unwrap();
    c.bench_function("gap_condition_m3_n200", |b| {
        b.iter(|| verify_gap_condition(&chain, black_box(200), 100_000))
    });
}

fn frames(c: &mut Criterion) {
    let chain = Chain::build(2, -80, 80).unwrap();
    let freqs: Vec<f64> = (-80..=80).map(|k| chain.lambda(k).unwrap()).collect();
    let mut g = c.benchmark_group("frame");
    g.bench_function("gram_eigen_161", |b| {
        b.iter(|| extreme_eigenvalues(&gram_matrix(black_box(&freqs), 14.28).unwrap()))
    });
    g.sample_size(10);
    g.bench_function("extended_gram_cholesky_41_80_digits", |b| {
        b.iter(|| {
            let gram = ExtendedGram::for_chain(&chain, 20, black_box(5.95), 80).unwrap();
            gram.count_below(1e-20)
        })
    });
    g.finish();
}

criterion_group!(benches, words, perron, chains, frames);
criterion_main!(benches);
