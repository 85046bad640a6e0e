use std::hint::black_box;

use cdp_core::scenario::workload_for;
use cdp_core::{simulate, Protocol, SimConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_scenario(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario_25_peers");
    group.sample_size(10);
    for protocol in [Protocol::Cdp, Protocol::GossipingLb, Protocol::Flooding] {
        let mut cfg = SimConfig::default();
        cfg.run.n_peers = 25;
        cfg.run.protocol = protocol;
        cfg.workload.n_queries = 50;
        let workload = workload_for(&cfg).unwrap();
        group.bench_function(BenchmarkId::from_parameter(protocol.name()), |b| {
            b.iter(|| simulate(black_box(&cfg), &workload).metrics)
        });
    }
    group.finish();
}

fn bench_workload(c: &mut Criterion) {
    let cfg = SimConfig::default();
    c.bench_function("generate_workload", |b| {
        b.iter(|| workload_for(black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, bench_scenario, bench_workload);
criterion_main!(benches);
