use std::hint::black_box;

use bellsim_bench::{product_model, timetag_streams};
use bellsim_core::jp::{jp_feasible, pr_mixture, random_local_system};
use bellsim_core::{
    demo_model, exact_correlations, match_coincidences, run_context_protocol,
    run_spreadsheet_protocol, violation_frequency, window_scan, ReplicationProtocol,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumeration");
    for size in [2, 4, 6] {
        let m = product_model(size);
        g.bench_with_input(BenchmarkId::new("contextual_product", size), &m, |b, m| {
            b.iter(|| exact_correlations(black_box(m)).unwrap())
        });
    }
    let eq3 = demo_model("demo_eq3").unwrap();
    g.bench_function("demo_eq3_joint", |b| {
        b.iter(|| black_box(&eq3).enumerate_joint().unwrap())
    });
    g.finish();
}

fn protocols(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocols");
    let n = 100_000;
    g.throughput(Throughput::Elements(4 * n));
    let eq3 = demo_model("demo_eq3").unwrap();
    g.bench_function("context_demo_eq3", |b| {
        b.iter(|| run_context_protocol(&eq3, [n; 4], 1).unwrap())
    });
    g.throughput(Throughput::Elements(n));
    let sat = demo_model("saturating_mixture").unwrap();
    g.bench_function("spreadsheet_saturating", |b| {
        b.iter(|| run_spreadsheet_protocol(&sat, n, 1).unwrap())
    });
    g.finish();
}

fn matching(c: &mut Criterion) {
    let mut g = c.benchmark_group("matching");
    let streams = timetag_streams(100_000);
    g.throughput(Throughput::Elements(100_000));
    g.bench_function("match_w0.25", |b| {
        b.iter(|| match_coincidences(&streams, 0.25).unwrap())
    });
    let windows = [0.1, 0.25, 0.45, 0.65, 0.85, 1.0];
    g.bench_function("scan_6_windows", |b| {
        b.iter(|| window_scan(&streams, &windows).unwrap())
    });
    g.finish();
}

fn feasibility(c: &mut Criterion) {
    let mut g = c.benchmark_group("jp_feasible");
    let pr = pr_mixture(1.0);
    let local = random_local_system(3);
    g.bench_function("pr_box", |b| {
        b.iter(|| jp_feasible(black_box(&pr)).unwrap())
    });
    g.bench_function("random_local", |b| {
        b.iter(|| jp_feasible(black_box(&local)).unwrap())
    });
    g.finish();
}

fn replication(c: &mut Criterion) {
    let mut g = c.benchmark_group("violation_frequency");
    g.sample_size(10);
    let sat = demo_model("saturating_mixture").unwrap();
    g.bench_function("saturating_1000x100", |b| {
        b.iter(|| violation_frequency(&sat, ReplicationProtocol::Contexts, 1_000, 100, 1).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    enumeration,
    protocols,
    matching,
    feasibility,
    replication
);
criterion_main!(benches);
