use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use semiheat::config::RunConfig;
use semiheat::experiments::run_fujita_scan;
use semiheat::parallel::Execution;

fn coarse() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid.nodes = 128;
    cfg.stepping.dt = 1e-2;
    cfg.stepping.horizon = 3.0;
    cfg.stepping.sample_every = 50;
    cfg
}

fn scan(c: &mut Criterion) {
    let cfg = coarse();
    let ps = [1.5, 5.0 / 3.0, 3.0, 5.0];
    let amps = [0.05, 0.5, 3.0];
    let mut group = c.benchmark_group("fujita_scan");
    group.sample_size(10);
    group.bench_function("serial", |b| b.iter(|| run_fujita_scan(black_box(&ps), &amps, &cfg, Execution::Serial)));
    group.bench_function("parallel", |b| b.iter(|| run_fujita_scan(black_box(&ps), &amps, &cfg, Execution::Parallel)));
    group.finish();
}

criterion_group!(benches, scan);
criterion_main!(benches);
