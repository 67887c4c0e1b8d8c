use criterion::{criterion_group, criterion_main, Criterion};
use occlusim::harness::run_batch_sequential;
use occlusim::{Family, RunConfig};

fn config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.batch.episodes = 24;
    cfg.batch.families = vec![Family::Sc2];
    cfg
}

fn batch(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("batch_sc2_24x4");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_batch_sequential(&cfg).unwrap()));
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| b.iter(|| occlusim::harness::run_batch_parallel(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
