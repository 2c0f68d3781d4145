use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sgl_bench::noisy_sphere;
use sgl_core::apply::{estimate_laplace_beltrami, sphere_test_function, sphere_test_point};
use sgl_core::dataset::gen_sphere;
use sgl_core::filter::filter_dataset;
use sgl_core::harmonics::decompose;
use sgl_core::kernel::fourier_blocks;
use sgl_core::xval::empirical_log_likelihood;
use sgl_core::{Base, KernelConfig};

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("fourier_blocks");
    g.sample_size(10);
    for n in [100, 200, 400] {
        let ds = noisy_sphere(n, 20, 0.5, 1);
        let cfg = KernelConfig::new(0.25).with_angles(64).with_debias(true);
        g.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| fourier_blocks(black_box(ds), &cfg).unwrap())
        });
    }
    g.finish();
}

fn harmonics(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    g.sample_size(10);
    for n in [100, 200, 400] {
        let fa =
            fourier_blocks(&gen_sphere(n, 2), &KernelConfig::new(0.25).with_angles(64)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &fa, |b, fa| {
            b.iter(|| decompose(black_box(fa), true).unwrap())
        });
    }
    g.finish();
}

fn filtering(c: &mut Criterion) {
    let ds = noisy_sphere(400, 50, 0.5, 3);
    let basis = decompose(
        &fourier_blocks(
            &ds,
            &KernelConfig::new(0.25).with_angles(64).with_debias(true),
        )
        .unwrap(),
        true,
    )
    .unwrap();
    c.bench_function("filter_dataset/400x50", |b| {
        b.iter(|| filter_dataset(black_box(&ds), &basis, 0.3).unwrap())
    });
}

fn estimator(c: &mut Criterion) {
    let ds = gen_sphere(2000, 4);
    let cfg = KernelConfig::new(0.6).with_angles(256);
    let base = Base::External(sphere_test_point());
    c.bench_function("estimate_laplace_beltrami/2000", |b| {
        b.iter(|| {
            estimate_laplace_beltrami(black_box(&ds), &sphere_test_function, &base, &cfg).unwrap()
        })
    });
}

fn likelihood(c: &mut Criterion) {
    let x = noisy_sphere(320, 20, 0.5, 5);
    let y = noisy_sphere(80, 20, 0.5, 6);
    c.bench_function("empirical_log_likelihood/80x320", |b| {
        b.iter(|| empirical_log_likelihood(black_box(&y), &x, 0.025, 64).unwrap())
    });
}

criterion_group!(benches, kernel, harmonics, filtering, estimator, likelihood);
criterion_main!(benches);
