use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use svar_signs::analysis::ma_coefficients;
use svar_signs::identification::{haar_sample, log_zero_weight, zero_restricted_q};
use svar_signs::linalg::cholesky;
use svar_signs::rng::{stream, Purpose};
use svar_signs::{identify, sample_niw, IdentifySettings, SamplingScheme};
use svar_signs_bench::{fixture, LAGS};

fn posterior(c: &mut Criterion) {
    let f = fixture(1);
    let mut group = c.benchmark_group("sample_niw");
    for scheme in [SamplingScheme::EquationWise, SamplingScheme::Joint] {
        group.bench_function(BenchmarkId::from_parameter(format!("{scheme:?}")), |b| {
            b.iter(|| sample_niw(&f.posterior, 100, 3, scheme).unwrap())
        });
    }
    group.finish();
}

fn haar(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar");
    for n in [3, 5, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                haar_sample(n, &mut stream(4, Purpose::Haar, i))
            })
        });
    }
    group.finish();
}

fn zero_weight(c: &mut Criterion) {
    let f = fixture(1);
    let draw = &f.draws[0];
    let chol = cholesky(&draw.sigma, "sigma").unwrap();
    let base: Vec<_> = ma_coefficients(&draw.a, LAGS, 0).iter().map(|m| m * &chol).collect();
    c.bench_function("zero_weight", |b| {
        b.iter_batched(
            || zero_restricted_q(&base, &f.restrictions, &mut stream(5, Purpose::Haar, 0)).unwrap(),
            |q| log_zero_weight(&draw.a, LAGS, &chol, &q, &f.restrictions).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn identification(c: &mut Criterion) {
    let f = fixture(200);
    let settings = IdentifySettings { narrative_sims: 200, seed: 6, ..IdentifySettings::default() };
    let mut group = c.benchmark_group("identify");
    group.sample_size(10);
    group
        .bench_function("200_draws", |b| b.iter(|| identify(&f.draws, &f.design, &f.restrictions, &settings).unwrap()));
    group.finish();
}

criterion_group!(benches, posterior, haar, zero_weight, identification);
criterion_main!(benches);
