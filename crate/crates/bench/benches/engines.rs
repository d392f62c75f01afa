use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chainswitch_core::bessel::{bessel_j_orders, PhasedBessel};
use chainswitch_core::perturbation::{count_diagrams_formula, count_walks, memory_sums_series};
use chainswitch_core::propagator::site_state;
use chainswitch_core::{ExactSolution, HandoffState, ModelParams, Propagator, PropagatorConfig, SwitchingProfile};

fn propagate(c: &mut Criterion) {
    let params = ModelParams::new(0.3).unwrap();
    let mut group = c.benchmark_group("propagate");
    group.sample_size(10);
    for t_max in [10.0, 40.0] {
        let cfg = PropagatorConfig {
            t_max,
            ..PropagatorConfig::default()
        };
        let prop = Propagator::new(cfg).unwrap();
        let psi = site_state(1);
        for (name, profile) in [
            ("sudden", SwitchingProfile::sudden(&params)),
            ("linear", SwitchingProfile::linear(&params, 2.0).unwrap()),
        ] {
            group.bench_with_input(BenchmarkId::new(name, t_max), &t_max, |b, _| {
                b.iter(|| prop.run(black_box(&psi), &profile).unwrap())
            });
        }
    }
    group.finish();
}

fn bessel(c: &mut Criterion) {
    c.bench_function("bessel_orders_200_at_150", |b| {
        b.iter(|| bessel_j_orders(black_box(200), black_box(150.0)))
    });
    c.bench_function("bessel_table_64_at_30", |b| b.iter(|| PhasedBessel::new(64, black_box(30.0))));
}

fn exact_series(c: &mut Criterion) {
    let params = ModelParams::new(0.3).unwrap();
    let handoff = HandoffState::site(1).unwrap();
    c.bench_function("exact_solution_setup", |b| {
        b.iter(|| ExactSolution::new(black_box(&handoff), &params).unwrap())
    });
    let exact = ExactSolution::new(&handoff, &params).unwrap();
    let mut group = c.benchmark_group("exact_amplitude");
    for t in [1.0, 20.0, 100.0] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| exact.amplitude(1, black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn diagrams(c: &mut Criterion) {
    c.bench_function("diagram_formula_n5_l40", |b| {
        b.iter(|| count_diagrams_formula(black_box(5), black_box(24)).unwrap())
    });
    c.bench_function("walk_count_1_to_5_in_24", |b| {
        b.iter(|| count_walks(black_box(1), black_box(5), black_box(24), 1).unwrap())
    });
}

fn memory(c: &mut Criterion) {
    let params = ModelParams::new(0.5).unwrap();
    let mut group = c.benchmark_group("memory_series");
    for rise in [0.5, 2.0, 5.0] {
        group.bench_with_input(BenchmarkId::from_parameter(rise), &rise, |b, &rise| {
            b.iter(|| memory_sums_series(black_box(rise), &params, 80).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, propagate, bessel, exact_series, diagrams, memory);
criterion_main!(benches);
