//! Throughput benchmarks: KL primitive, one model step, and one explained
//! sample per method. Run with `cargo bench -p tsexplain-bench`.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use tsexplain_bench::bench_fixture;
use tsexplain_core::{
    explain_sample, kl_divergence, ExplainConfig, Method, PredictiveDistribution,
    SequencePredictor,
};

fn bench_kl(c: &mut Criterion) {
    let p = PredictiveDistribution::from_logits(&[0.2, -1.3, 0.7, 2.1]);
    let q = PredictiveDistribution::from_logits(&[-0.4, 0.9, 0.0, 1.2]);
    c.bench_function("kl_divergence_k4", |b| {
        b.iter(|| kl_divergence(black_box(&p), black_box(&q)))
    });
}

fn bench_predictor_step(c: &mut Criterion) {
    let (predictor, _, test) = bench_fixture();
    let x: Vec<f64> = (0..predictor.num_features())
        .map(|f| test.samples[0].values[[f, 0]])
        .collect();
    c.bench_function("predictor_step_h32", |b| {
        b.iter_batched(
            || predictor.init_state(),
            |mut state| predictor.step(&mut state, black_box(&x)),
            BatchSize::SmallInput,
        )
    });
}

fn bench_methods(c: &mut Criterion) {
    let (predictor, generator, test) = bench_fixture();
    let sample = &test.samples[0];
    let mut group = c.benchmark_group("explain_sample_t40_d3");
    group.sample_size(10);
    for (name, method, window) in [
        ("fit", Method::Fit, 8),
        ("ifit", Method::Ifit, 1),
        ("winit_n8", Method::Winit, 8),
        ("fo", Method::FeatureOcclusion, 1),
    ] {
        let mut ec = ExplainConfig::new(method);
        ec.window = window;
        ec.mc_samples = 10;
        ec.seed = 11;
        group.bench_function(name, |b| {
            b.iter(|| explain_sample(&predictor, &generator, black_box(sample), &ec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kl, bench_predictor_step, bench_methods);
criterion_main!(benches);
