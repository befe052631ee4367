use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use catsim::reduction::{self, QuadratureSpec};
use catsim::{normal_basis, Evolution, Execution, ModelParams};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn cube_marginals(c: &mut Criterion) {
    let evo = Evolution::new(normal_basis(&ModelParams::paper()).unwrap());
    let quad = QuadratureSpec::trapezoid(64);
    let mut group = c.benchmark_group("reduce_all_64");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| reduction::reduce_all_with(exec, &evo, 4.005, &quad).unwrap())
        });
    }
    group.finish();
}

fn single_profile(c: &mut Criterion) {
    let evo = Evolution::new(normal_basis(&ModelParams::paper()).unwrap());
    let quad = QuadratureSpec::trapezoid(128);
    let grid = reduction::output_grid(reduction::adaptive_extent(evo.basis(), 4.005), 101);
    let mut group = c.benchmark_group("reduce_128x101");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| reduction::reduce_with(exec, &evo, 1, 4.005, &grid, &quad).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cube_marginals, single_profile);
criterion_main!(benches);
