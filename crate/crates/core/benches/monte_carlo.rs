//! Replicate throughput: one thread against the work-stealing pool.
//!
//! Each item is a small FD run followed by the augmented fit, i.e. the shape of
//! a Monte Carlo replication with the grid shrunk to keep the bench short.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use localest::estimators::augmented_mle;
use localest::fd::{simulate, CoefficientField, Grid, InitialCondition, SimConfig, SimOptions};
use localest::harness::par::{map_indexed, map_sequential, thread_count, Progress};
use localest::harness::seed::derive_seed;
use localest::kernels::{make_paper_kernels, rescale, RescaledProbe};

const REPS: usize = 16;

fn replicate(probe: &RescaledProbe, i: usize) -> f64 {
    let cfg = SimConfig {
        grid: Grid::new(64, 2000, 0.2).unwrap(),
        coeffs: CoefficientField::constant(1.0, 1.0),
        initial: InitialCondition::Zero,
        seed: derive_seed(7, i as u64, 0),
    };
    let path = simulate(&cfg, std::slice::from_ref(probe), &SimOptions::default()).unwrap().pop().unwrap();
    augmented_mle(&path).map_or(f64::NAN, |r| r.theta_hat)
}

fn replicates(c: &mut Criterion) {
    let (k1, _) = make_paper_kernels();
    let probe = rescale(&k1, 0.2, 0.5).unwrap();
    let mut group = c.benchmark_group("replicates");
    group.throughput(Throughput::Elements(REPS as u64));
    group.sample_size(10);

    group.bench_function("sequential", |b| {
        b.iter(|| map_sequential(REPS, &Progress::default(), |i| replicate(&probe, i)))
    });
    // at least two workers so the pool path is exercised even on one core
    let mut counts = vec![2, thread_count(None)];
    counts.dedup();
    for threads in counts.into_iter().filter(|&t| t >= 2) {
        group.bench_with_input(BenchmarkId::new("parallel", threads), &threads, |b, &t| {
            b.iter(|| map_indexed(REPS, t, &Progress::default(), |i| replicate(&probe, i)))
        });
    }
    group.finish();
}

criterion_group!(benches, replicates);
criterion_main!(benches);
