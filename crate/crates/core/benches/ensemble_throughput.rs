//! Throughput of ensemble sampling, sequential versus rayon-parallel.
//!
//! Run with `cargo bench -p photonoise-core`. The parallel path needs the
//! default `parallel` feature; without it both modes run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use photonoise_core::ensembles::{
    sample_cavity, sample_waveguide, CavitySpec, RngSeed, WaveguideSpec,
};
use photonoise_core::exec::{map_samples, ExecMode};
use photonoise_core::scatter::Regime;

fn bench_cavity(c: &mut Criterion) {
    let spec = CavitySpec::new(10, 0.5, Regime::Amplifying, 100).unwrap();
    let mut group = c.benchmark_group("cavity_ensemble_16");
    group.sample_size(10);
    for (name, mode) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let sum: f64 = map_samples(16, mode, |i| {
                    let sm = sample_cavity(&spec, RngSeed::new(1, i)).unwrap();
                    sm.matrix().frobenius_norm()
                })
                .into_iter()
                .sum();
                sum
            })
        });
    }
    group.finish();
}

fn bench_waveguide(c: &mut Criterion) {
    let spec = WaveguideSpec::new(10, 1.0, 5.0, 5.0 / 1.5, Regime::Amplifying).unwrap();
    let mut group = c.benchmark_group("waveguide_ensemble_16");
    group.sample_size(10);
    for (name, mode) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let sum: f64 = map_samples(16, mode, |i| {
                    let sm = sample_waveguide(&spec, RngSeed::new(2, i)).unwrap();
                    sm.matrix().frobenius_norm()
                })
                .into_iter()
                .sum();
                sum
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_cavity, bench_waveguide);
criterion_main!(benches);
