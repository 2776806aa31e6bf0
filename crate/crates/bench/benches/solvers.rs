use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use revpot::bvp::find_reversal_bvp;
use revpot::{
    reversal_charge, solve, solve_a, sweep, BathConditions, ChannelGeometry, Profile, SweepInputs,
    SweepParameter, Transport,
};

fn setup() -> (BathConditions, ChannelGeometry) {
    let bath = BathConditions::new(0.2, 1.0, 1.0).unwrap();
    let geom = ChannelGeometry::new(Profile::Constant(1.0), 1.0 / 3.0, 2.0 / 3.0).unwrap();
    (bath, geom)
}

fn reduced(c: &mut Criterion) {
    let (bath, geom) = setup();
    let t = Transport::from_theta(1.0, 0.5).unwrap();

    let mut g = c.benchmark_group("solve_a");
    for q0 in [0.0, 1.0, 100.0, -1e4] {
        g.bench_with_input(BenchmarkId::from_parameter(q0), &q0, |b, &q0| {
            b.iter(|| solve_a(black_box(q0), 0.5, &bath, &geom).unwrap())
        });
    }
    g.finish();

    c.bench_function("solve", |b| {
        b.iter(|| solve(black_box(10.0), &t, &bath, &geom).unwrap())
    });

    let mut g = c.benchmark_group("reversal_charge");
    for v in [-0.6, 0.2, 1.5] {
        g.bench_with_input(BenchmarkId::from_parameter(v), &v, |b, &v| {
            b.iter(|| reversal_charge(black_box(v), 0.5, &bath, &geom).unwrap())
        });
    }
    g.finish();

    let fixed = SweepInputs {
        q0: 0.0,
        transport: t,
        bath,
        geometry: geom,
    };
    let grid: Vec<f64> = (0..1000).map(|k| -100.0 + 0.2 * k as f64).collect();
    c.bench_function("sweep_q0_1000", |b| {
        b.iter(|| sweep(SweepParameter::Q0, black_box(&grid), &fixed))
    });
}

fn bvp(c: &mut Criterion) {
    let (bath, geom) = setup();
    let t = Transport::from_theta(1.0, 0.5).unwrap();
    let mut g = c.benchmark_group("find_reversal_bvp");
    g.sample_size(10);
    for eps in [0.04, 0.01] {
        g.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, &eps| {
            b.iter(|| find_reversal_bvp(black_box(eps), 5.0, &bath, &geom, &t).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, reduced, bvp);
criterion_main!(benches);
