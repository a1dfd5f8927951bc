//! Criterion benches comparing the data-parallel paths against a
//! single-thread baseline. With the default `parallel` feature the
//! baseline runs inside a one-thread rayon pool; with
//! `--no-default-features` both entries use the sequential fallback.

use criterion::{criterion_group, criterion_main, Criterion};

use diversity::metrization::verify_random_suite;
use diversity::zoo::grid_experiment;

fn with_one_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

fn bench_grid(c: &mut Criterion) {
    let sizes: Vec<u32> = (2..=10).collect();
    let mut group = c.benchmark_group("grid_experiment");
    group.bench_function("parallel", |b| {
        b.iter(|| grid_experiment(&sizes).unwrap())
    });
    group.bench_function("single_thread", |b| {
        b.iter(|| with_one_thread(|| grid_experiment(&sizes).unwrap()))
    });
    group.finish();
}

fn bench_metrization_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_random_suite");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| verify_random_suite(30, 4, 2026).unwrap())
    });
    group.bench_function("single_thread", |b| {
        b.iter(|| with_one_thread(|| verify_random_suite(30, 4, 2026).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_grid, bench_metrization_suite);
criterion_main!(benches);
