use std::f64::consts::PI;
use std::hint::black_box;

use cbf_core::lyapunov::{evolve_ensemble_qr, LyapunovConfig};
use cbf_core::par::{self, Execution};
use cbf_core::{make_grid, random_divfree_field, ForcingSpec, Model, PhysParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn model(n: usize) -> Model {
    let grid = make_grid(n, 2.0 * PI, 2).unwrap();
    let forcing = ForcingSpec::Kolmogorov { wavenumber: 4, amplitude: 0.4 };
    Model::new(&grid, PhysParams::new(0.025, 0.0, 0.01, 3, forcing).unwrap()).unwrap()
}

fn tendency_batch(c: &mut Criterion) {
    let m = model(64);
    let fields: Vec<_> = (0..32).map(|s| random_divfree_field(m.grid(), s, 1.0, 1.0).unwrap()).collect();
    let mut group = c.benchmark_group("tendency_batch_n64");
    for (name, mode) in MODES {
        par::set_execution(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(par::map(&fields, |u| m.tendency(u))))
        });
    }
    group.finish();
}

fn tangent_ensemble(c: &mut Criterion) {
    let m = model(32);
    let u0 = random_divfree_field(m.grid(), 1, 1.0, 2.0).unwrap();
    let cfg = LyapunovConfig::new(12, 0.01, 0.2);
    let mut group = c.benchmark_group("tangent_ensemble_m12_n32");
    group.sample_size(10);
    for (name, mode) in MODES {
        par::set_execution(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(evolve_ensemble_qr(&m, &u0, &cfg).unwrap()))
        });
    }
    group.finish();
    par::set_execution(Execution::Parallel);
}

criterion_group!(benches, tendency_batch, tangent_ensemble);
criterion_main!(benches);
