use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diew::network::SwapNetwork;
use diew::optimize::{maximize_witness, OptimizerConfig};
use diew::par::Execution;
use diew::scan::{sweep, GridSpec, ScanMode};
use diew::states::{rho1, StateParams};
use diew::witnesses::{bancal, WitnessName};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn restarts(c: &mut Criterion) {
    let rho = rho1(0.9, 0.6).unwrap();
    let spec = bancal();
    let mut g = c.benchmark_group("maximize_bancal_32_restarts");
    for (name, exec) in MODES {
        let cfg = OptimizerConfig::default().with_restarts(32).with_exec(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| maximize_witness(black_box(&rho), &spec, &cfg).unwrap())
        });
    }
    g.finish();
}

fn patterns(c: &mut Criterion) {
    let network = SwapNetwork::from_params(&StateParams::new(0.8, 0.7, 0.5).unwrap()).unwrap();
    let mut g = c.benchmark_group("outcome_distribution_64");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| network.outcome_distribution(black_box(exec)).unwrap())
        });
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let grid = GridSpec::new("0.1:0.78:4".parse().unwrap(), "0:1:4".parse().unwrap(), 0.6).unwrap();
    let mut g = c.benchmark_group("numeric_sweep_4x4");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = OptimizerConfig::default().with_restarts(4).with_exec(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(&grid, WitnessName::Mermin, ScanMode::Numeric, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, restarts, patterns, grid);
criterion_main!(benches);
