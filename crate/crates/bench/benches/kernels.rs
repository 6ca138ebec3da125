use burgers_core::critical::{find_zc, LeadingTail};
use burgers_core::pde_oracle::{integrate, OracleGrid};
use burgers_core::{rescaled_solution, scan_landscape, FamilySpec, Frame, QuadratureOptions, TailFamily};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn two_term() -> TailFamily {
    let spec = FamilySpec::TwoTerm {
        kappa1: 1.0,
        alpha: 0.5,
        kappa2: 1.0,
        beta: 0.6,
    };
    TailFamily::construct(&spec, 1.0).unwrap()
}

fn kernels(c: &mut Criterion) {
    let datum = two_term();
    let opts = QuadratureOptions::default();
    let near_shock = Frame::for_datum(&datum, 1e8, 3.6).unwrap();
    let origin = Frame::for_datum(&datum, 1e6, 0.0).unwrap();

    c.bench_function("antiderivative", |b| {
        b.iter(|| datum.antiderivative(black_box(123.4)))
    });
    c.bench_function("landscape_scan", |b| {
        b.iter(|| scan_landscape(&datum, black_box(&near_shock), None, None).unwrap())
    });
    c.bench_function("quadrature_t1e8", |b| {
        b.iter(|| rescaled_solution(&datum, black_box(&near_shock), &opts).unwrap())
    });
    c.bench_function("quadrature_t1e6_origin", |b| {
        b.iter(|| rescaled_solution(&datum, black_box(&origin), &opts).unwrap())
    });
    c.bench_function("critical_point", |b| {
        let leading = LeadingTail::new(1.0, 0.5).unwrap();
        b.iter(|| find_zc(black_box(&leading)).unwrap())
    });

    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let grid = OracleGrid::new(40.0, 2001, 0.005).unwrap();
    group.bench_function("integrate_t1_nx2001", |b| {
        b.iter(|| integrate(&datum, black_box(&grid), 1.0, &[]).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
