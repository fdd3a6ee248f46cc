use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regionboot::bp_engine::{bp_mc, bp_quad, dbp_quad};
use regionboot::methods::{pvalue_report, Method, PipelineConfig};
use regionboot::rejection_lab::rejection_probability;
use regionboot::{CenterRule, Region, Scheme};
use regionboot_bench::{cone_mean, quick_lab, workloads};

fn bp(c: &mut Criterion) {
    let mut group = c.benchmark_group("bp");
    for w in workloads() {
        group.bench_with_input(BenchmarkId::new("quad", w.name), &w, |b, w| b.iter(|| bp_quad(&w.region, &w.y, 1.0).unwrap()));
    }
    let cone = Region::cone();
    let y = workloads()[0].y;
    group.sample_size(10);
    group.bench_function("mc_1e6", |b| b.iter(|| bp_mc(&cone, &y, 1.0, 1_000_000, 1, 0).unwrap()));
    group.finish();
}

fn dbp(c: &mut Criterion) {
    let mut group = c.benchmark_group("dbp_quad");
    group.sample_size(10);
    for w in workloads() {
        group.bench_with_input(BenchmarkId::from_parameter(w.name), &w, |b, w| {
            b.iter(|| dbp_quad(&w.region, &w.y, 1.0, 1.0, &CenterRule::Projection).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let w = &workloads()[0];
    let methods = Method::ALL;
    let config = PipelineConfig::quad();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("all_methods_cone_y1", |b| b.iter(|| pvalue_report(&w.region, &w.y, &methods, &config).unwrap()));
    group.finish();
}

fn rejection(c: &mut Criterion) {
    let cone = Region::cone();
    let lab = quick_lab();
    let mut group = c.benchmark_group("rejection");
    group.sample_size(10);
    for method in [Method::Bp, Method::Mcb, Method::Au2] {
        group.bench_with_input(BenchmarkId::new("quad", method), &method, |b, &m| {
            b.iter(|| rejection_probability(m, &cone, &cone_mean(1.0), 0.05, Scheme::Quad, &lab).unwrap())
        });
    }
    group.bench_function("mc_signed_lr", |b| {
        b.iter(|| rejection_probability(Method::SignedLr, &cone, &cone_mean(1.0), 0.05, Scheme::Mc, &lab).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bp, dbp, pipeline, rejection);
criterion_main!(benches);
