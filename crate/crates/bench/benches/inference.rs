use criterion::{criterion_group, criterion_main, Criterion};
use flowmap_bench::{model, random_seeds};
use flowmap_core::fields::DoubleGyre;
use flowmap_core::flowmap::FlowMapStrategy;
use flowmap_core::reconstruct::{ftle_from_field, ftle_from_model, infer_long, infer_short};

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("infer");
    group.sample_size(10);
    let seeds = random_seeds(2000);
    let long = model(FlowMapStrategy::Long, 1.0);
    let cycles = long.extraction.cycle_list();
    group.bench_function("long/2000x20", |b| b.iter(|| infer_long(&long, &seeds, &cycles).unwrap()));
    let short = model(FlowMapStrategy::Short, 1.0);
    group.bench_function("short_stitched/2000x20", |b| b.iter(|| infer_short(&short, &seeds, &cycles).unwrap()));
    group.finish();
}

fn ftle(c: &mut Criterion) {
    let mut group = c.benchmark_group("ftle");
    group.sample_size(10);
    let field = DoubleGyre::default();
    group.bench_function("truth/64x32/300", |b| b.iter(|| ftle_from_field(&field, 64, 32, 300, 0.01).unwrap()));
    let long = model(FlowMapStrategy::Long, 0.25);
    group.bench_function("model/256x128", |b| b.iter(|| ftle_from_model(&long, 256, 128, 500).unwrap()));
    group.finish();
}

criterion_group!(benches, trajectories, ftle);
criterion_main!(benches);
