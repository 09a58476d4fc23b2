use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fqx::density::truncated_zeta_tail_checks;
use fqx::{
    complete_to_invertible, exhaustive_census, is_unimodular, minors_gcd, smith_normal_form,
    FieldSpec, Predicate, RunConfig, SpaceSpec,
};
use fqx_bench::matrices;

fn gcd(c: &mut Criterion) {
    let mut group = c.benchmark_group("minors_gcd");
    for (q, k, n) in [(2, 1, 2), (3, 2, 3), (4, 3, 4)] {
        let input = matrices(q, k, n, q.pow(6) - 1, 64, 1);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("q{q}_{k}x{n}")),
            &input,
            |b, ms| {
                b.iter(|| {
                    ms.iter().for_each(|a| {
                        black_box(minors_gcd(black_box(a)).unwrap());
                    })
                })
            },
        );
    }
    group.finish();
}

fn census(c: &mut Criterion) {
    let f = FieldSpec::with_order(3).unwrap();
    let space = SpaceSpec::new(&f, 2, 2, 8).unwrap();
    let cfg = RunConfig::with_workers(1);
    c.bench_function("census_q3_2x2_N8", |b| {
        b.iter(|| {
            exhaustive_census(black_box(&space), &Predicate::Unimodular, &cfg)
                .unwrap()
                .hits
        })
    });
}

fn smith(c: &mut Criterion) {
    let input = matrices(3, 3, 4, 80, 32, 2);
    c.bench_function("smith_q3_3x4", |b| {
        b.iter(|| {
            input.iter().for_each(|a| {
                black_box(smith_normal_form(black_box(a)));
            })
        })
    });
    let unimodular: Vec<_> = matrices(2, 2, 4, 15, 256, 3)
        .into_iter()
        .filter(|a| is_unimodular(a).unwrap())
        .collect();
    c.bench_function("complete_q2_2x4", |b| {
        b.iter(|| {
            unimodular.iter().for_each(|a| {
                black_box(complete_to_invertible(black_box(a)).unwrap());
            })
        })
    });
}

fn zeta(c: &mut Criterion) {
    c.bench_function("zeta_tail_q3_j3_t8", |b| {
        b.iter(|| truncated_zeta_tail_checks(black_box(3), 3, 8).unwrap())
    });
}

criterion_group!(benches, gcd, census, smith, zeta);
criterion_main!(benches);
