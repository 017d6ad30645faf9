//! Throughput benches for the data-parallel hot paths.
//!
//! With the default `parallel` feature each group compares a
//! single-thread rayon pool against the full pool; building with
//! `--no-default-features` benches the sequential fallback instead, so
//! the two builds can be compared head to head:
//!
//! ```text
//! cargo bench -p seqinvert
//! cargo bench -p seqinvert --no-default-features
//! ```

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use seqinvert::credible::credible_radius;
use seqinvert::experiments::{
    contraction_study, PriorTemplate, StudyConfig, TruthSpec,
};
use seqinvert::operators::{catalog_signal, CatalogSignal, Operator, SeriesEvaluator};
use seqinvert::posterior::Posterior;
use seqinvert::transform::{project_values, synthesize_grid, ProjectionMethod};
use seqinvert::{DesignGrid, GridFamily};

#[cfg(feature = "parallel")]
fn thread_counts() -> Vec<usize> {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    if max > 1 {
        vec![1, max]
    } else {
        vec![1]
    }
}

/// Runs `f` under a rayon pool with `threads` workers (parallel build)
/// or directly (sequential build, where `threads` is a label only).
#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn thread_counts() -> Vec<usize> {
    vec![1]
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn label() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

fn bench_projection(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("project/{}", label()));
    let op = Operator::Volterra;
    let truth = catalog_signal(CatalogSignal::VolterraTruth, 1 << 16);
    for n in [1024usize, 4096] {
        let grid = DesignGrid::new(n, GridFamily::HalfInteger).unwrap();
        let y = synthesize_grid(&op, &truth, &grid).unwrap();
        group.bench_with_input(BenchmarkId::new("naive", n), &n, |b, _| {
            b.iter(|| project_values(&op, &grid, &y, ProjectionMethod::Naive).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| project_values(&op, &grid, &y, ProjectionMethod::Fast).unwrap())
        });
    }
    group.finish();
}

fn bench_radius(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("credible_radius/{}", label()));
    group.sample_size(10);
    let n = 2000usize;
    let a: Vec<f64> = (1..n).map(|k| 1.0 / k as f64).collect();
    let lambda: Vec<f64> = (1..n).map(|k| (k as f64).powf(-3.0)).collect();
    let post = Posterior::from_components(n, &a, &lambda, &vec![0.0; n - 1]);
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_threads(threads, || credible_radius(&post, 0.05, 20_000, 1).unwrap())
                })
            },
        );
    }
    group.finish();
}

fn bench_contraction(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("contraction_study/{}", label()));
    group.sample_size(10);
    let cfg = StudyConfig {
        operator: Operator::Volterra,
        prior: PriorTemplate::polynomial(1.0, 1.0),
        truth: TruthSpec::Catalog {
            name: CatalogSignal::VolterraTruth,
        },
        n_list: vec![512, 1024],
        replicates: 16,
        gamma: 0.05,
        seed: 1,
        mc_draws: 10_000,
        noise_sd: 1.0,
    };
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| b.iter(|| with_threads(threads, || contraction_study(&cfg).unwrap())),
        );
    }
    group.finish();
}

fn bench_band_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("series_eval/{}", label()));
    let op = Operator::heat();
    let xs: Vec<f64> = (0..201).map(|j| j as f64 / 200.0).collect();
    let coeffs: Vec<f64> = (1..10_000).map(|k| (k as f64).powf(-1.5)).collect();
    let eval = SeriesEvaluator::new(&op, &xs);
    group.bench_function("coeffs_10k_points_201", |b| {
        b.iter(|| eval.evaluate(&coeffs))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_projection,
    bench_radius,
    bench_contraction,
    bench_band_evaluation
);
criterion_main!(benches);
