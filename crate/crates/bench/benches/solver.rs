use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use tmpkit_core::analyze::{analyze, SolveOptions};
use tmpkit_core::arith::Rational;
use tmpkit_core::flat_ext::{compress, compute_r};
use tmpkit_core::generate::{cusp_instance, symmetric_instance, univariate_atoms, univariate_moments};
use tmpkit_core::io::{fixtures, parse_moment_json};
use tmpkit_core::moments::build_moment_matrix;
use tmpkit_core::symmetric::{solve_symmetric, SymmetricOptions};
use tmpkit_core::univariate::{solve_union, UnivariateOptions};
use tmpkit_core::CurveParams;

fn examples(c: &mut Criterion) {
    let mut group = c.benchmark_group("examples");
    for (name, text) in fixtures::all().into_iter().take(3) {
        let f = parse_moment_json(text).unwrap();
        group.bench_with_input(BenchmarkId::new("compute_r", name), &f, |b, f| {
            b.iter(|| compute_r(&compress(black_box(&f.beta), &f.curve).unwrap()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("analyze", name), &f, |b, f| {
            b.iter(|| analyze(black_box(&f.beta), &f.curve, &SolveOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn linear_algebra(c: &mut Criterion) {
    let inst = cusp_instance(9, 3, 7);
    let m = build_moment_matrix(&inst.beta);
    c.bench_function("rank M(3)", |b| b.iter(|| black_box(&m).rank()));
    c.bench_function("is_psd M(3)", |b| b.iter(|| black_box(&m).is_psd()));
}

fn pipelines(c: &mut Criterion) {
    let curve = CurveParams::new(Rational::from_integer((-1).into()), Rational::from_integer(0.into()));
    let inst = symmetric_instance(&curve, 5, 3, 1);
    c.bench_function("symmetric x^3 - x", |b| {
        b.iter(|| solve_symmetric(black_box(&inst.beta), &curve, &SymmetricOptions::default()).unwrap())
    });

    let one = Rational::from_integer(1.into());
    let two = Rational::from_integer(2.into());
    let (ts, ws) = univariate_atoms(5, Some((&one, &two)), 3);
    let gamma = univariate_moments(&ts, &ws, 9);
    let opts = UnivariateOptions {
        precision_bits: 128,
        tolerance: tmpkit_core::numeric::pow10_neg(20, 160),
        hints: vec![],
    };
    c.bench_function("union N = 9", |b| {
        b.iter(|| solve_union(black_box(&gamma), &one, &two, &opts).unwrap())
    });
}

criterion_group!(benches, examples, linear_algebra, pipelines);
criterion_main!(benches);
