//! Throughput of batch scenario evaluation: rayon data-parallel runner
//! against the sequential fallback on the same scenario set.

use cavsim_core::batch::{random_scenario, run_batch, run_batch_sequential};
use cavsim_core::simulator::{ControllerChoice, Scenario};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn scenario_set(n: u64) -> Vec<Scenario> {
    (0..n)
        .map(|seed| {
            let mut s = random_scenario(seed, ControllerChoice::Proposed);
            s.t_end = 10.0;
            s
        })
        .collect()
}

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_run");
    group.sample_size(10);
    for n in [4u64, 16] {
        let scenarios = scenario_set(n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &scenarios, |b, s| {
            b.iter(|| run_batch_sequential(s))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &scenarios, |b, s| {
            b.iter(|| run_batch(s))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
