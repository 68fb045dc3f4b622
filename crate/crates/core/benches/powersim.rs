//! Power-engine benchmarks: parallel cell execution against a
//! single-thread baseline.
//!
//! With the default `parallel` feature the same work is timed on a
//! one-thread rayon pool and on the default pool; built with
//! `--no-default-features` only the sequential path exists. Outputs are
//! bit-identical either way, so the comparison is purely about speed.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use omicsprep::powersim::{run_power, Scenario, SimGrid};

fn bench_grid(n_reps: usize) -> SimGrid {
    SimGrid {
        effect_sizes: vec![0.0, 0.5, 1.0, 1.5],
        sigma_b_values: vec![3.6, 0.45],
        n_reps,
        seed: 99,
        ..SimGrid::default()
    }
}

fn bench_power(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_power");
    group.sample_size(10);
    for scenario in [Scenario::blocked(), Scenario::glycomics()] {
        let grid = bench_grid(100);

        #[cfg(feature = "parallel")]
        {
            let single = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .expect("single-thread pool");
            group.bench_with_input(
                BenchmarkId::new("serial", &scenario.name),
                &grid,
                |b, grid| {
                    b.iter(|| single.install(|| run_power(black_box(&scenario), grid).unwrap()))
                },
            );
            group.bench_with_input(
                BenchmarkId::new("parallel", &scenario.name),
                &grid,
                |b, grid| b.iter(|| run_power(black_box(&scenario), grid).unwrap()),
            );
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_with_input(
            BenchmarkId::new("sequential", &scenario.name),
            &grid,
            |b, grid| b.iter(|| run_power(black_box(&scenario), grid).unwrap()),
        );
    }
    group.finish();
}

fn bench_closure_demo(c: &mut Criterion) {
    c.bench_function("closure_bias_p3_n10000", |b| {
        b.iter(|| omicsprep::transforms::closure_bias_experiment(3, 10_000, black_box(17)).unwrap())
    });
}

criterion_group!(benches, bench_power, bench_closure_demo);
criterion_main!(benches);
