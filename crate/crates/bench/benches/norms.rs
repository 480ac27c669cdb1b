use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use modspace::calculus::{product_verdict, ProductQuery};
use modspace::harness::LatticeSetup;
use modspace::norm::gaussian_window;
use modspace::testbed::{coefficient_family, make_lattice_modulated, modulated_gaussian, Family};
use modspace::{forward_ft, mod_norm_decomp, mod_norm_stft, rat, ExtendedExponent, GridSpec, SpaceParams};

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_ft");
    for size in [1024usize, 16384, 131072] {
        let grid = GridSpec::new(1, 32, size).unwrap();
        let f = modulated_gaussian(grid, 1.0, [2.0, 0.0]);
        group.bench_with_input(BenchmarkId::from_parameter(size), &f, |b, f| b.iter(|| forward_ft(black_box(f))));
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let two = ExtendedExponent::two();
    let params = SpaceParams::new(rat(1, 2), two, ExtendedExponent::Infinite, 1);
    let mut group = c.benchmark_group("mod_norm_decomp");
    group.sample_size(20);
    for cutoff in [16usize, 64, 256] {
        let coeffs = coefficient_family(&Family::Constant, 1, cutoff).unwrap();
        let ctx = LatticeSetup::default().context(1, coeffs.radius()).unwrap();
        let f = make_lattice_modulated(&ctx.psi, &coeffs).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &f, |b, f| {
            b.iter(|| mod_norm_decomp(black_box(f), params, &ctx.bank).unwrap())
        });
    }
    group.finish();
}

fn stft_norm(c: &mut Criterion) {
    let grid = GridSpec::new(1, 4, 512).unwrap();
    let f = modulated_gaussian(grid, 0.5, [0.0; 2]);
    let w = gaussian_window(grid, 2.0);
    let params = SpaceParams::int(1, ExtendedExponent::two(), ExtendedExponent::one(), 1);
    c.bench_function("mod_norm_stft/512", |b| b.iter(|| mod_norm_stft(black_box(&f), params, &w).unwrap()));
}

fn verdicts(c: &mut Criterion) {
    let e = ExtendedExponent::int;
    let q = ProductQuery::new(
        SpaceParams::new(rat(1, 1), e(4), e(2), 1),
        SpaceParams::new(rat(1, 1), e(4), e(2), 1),
        SpaceParams::new(rat(1, 1), e(2), e(2), 1),
    )
    .unwrap();
    c.bench_function("product_verdict", |b| b.iter(|| product_verdict(black_box(&q)).unwrap()));
}

criterion_group!(benches, fft, decomposition, stft_norm, verdicts);
criterion_main!(benches);
