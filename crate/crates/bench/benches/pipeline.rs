use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mee_bench::{center, clayton_sample, clayton_xi};
use mee_core::dependence::CopulaFamily;
use mee_core::objective::{loss_gradient, tail_integral};
use mee_core::{estimate_mee, EstimationConfig, LambdaFunction, QuadratureConfig, ThetaVector};

fn tail_integrals(c: &mut Criterion) {
    let q = QuadratureConfig::default();
    let mut g = c.benchmark_group("tail_integral");
    for (name, fam) in [
        ("comonotone", CopulaFamily::Comonotone),
        ("clayton", CopulaFamily::SurvivalClayton { theta: 1.0 }),
    ] {
        let lam = LambdaFunction::ClosedForm(fam);
        g.bench_function(name, |b| {
            b.iter(|| tail_integral(&lam, black_box(0.4), 2.0, 1.0, black_box(0.7), &q).unwrap())
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let q = QuadratureConfig::default();
    let mut g = c.benchmark_group("loss_gradient");
    for d in [2, 3, 5] {
        let xi = clayton_xi(d);
        let theta = ThetaVector::symmetric(0.3, d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| loss_gradient(black_box(&theta), &xi, &q).unwrap())
        });
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_mee");
    g.sample_size(10);
    let cfg = EstimationConfig::default();
    for n in [2000, 5000] {
        let s = clayton_sample(n, 2, 1);
        let y = center(s.p());
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| estimate_mee(black_box(&s), &y, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, tail_integrals, gradients, end_to_end);
criterion_main!(benches);
