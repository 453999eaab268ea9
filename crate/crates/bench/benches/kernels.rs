use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use holopulse::metrics::hd95;
use holopulse::pipeline::{run, PipelineParams};
use holopulse::pulse::correlation_map;
use holopulse::skeleton::skeletonize;
use holopulse::{Class, PulseSignal};
use holopulse_bench::phantom;

fn correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation_map");
    for size in [128, 256] {
        let truth = phantom(size, 128);
        let pulse = PulseSignal::raw(truth.stack.series(0).iter().map(|&v| v as f64).collect());
        group.bench_with_input(BenchmarkId::from_parameter(size), &truth, |b, t| {
            b.iter(|| correlation_map(black_box(&t.stack), &pulse).unwrap())
        });
    }
    group.finish();
}

fn thinning(c: &mut Criterion) {
    let mask = phantom(256, 128).gt_mask.vessel_mask();
    c.bench_function("skeletonize/256", |b| {
        b.iter(|| skeletonize(black_box(&mask)))
    });
}

fn distance(c: &mut Criterion) {
    let gt = phantom(256, 128).gt_mask;
    let (a, v) = (gt.class_mask(Class::Artery), gt.class_mask(Class::Vein));
    c.bench_function("hd95/256", |b| {
        b.iter(|| hd95(black_box(&a), black_box(&v)).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let truth = phantom(256, 128);
    let mask = truth.gt_mask.vessel_mask();
    let params = PipelineParams::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("256x256x128", |b| {
        b.iter(|| run(black_box(&truth.stack), &mask, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, correlation, thinning, distance, pipeline);
criterion_main!(benches);
