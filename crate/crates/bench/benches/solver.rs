use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use stringmass_bench::{reference_basis, reference_params, reference_spectrum};
use stringmass_core::dynamics::{evolve_modes, fd_evolve, project, reconstruct};
use stringmass_core::fock::factorization_diagnostic;
use stringmass_core::spectrum::find_negative_modes;
use stringmass_core::{calibrate, CUBIC_TOL};

fn calibration(c: &mut Criterion) {
    let p = reference_params();
    c.bench_function("calibrate", |b| {
        b.iter(|| calibrate(black_box(&p), CUBIC_TOL).unwrap())
    });
}

fn secular_roots(c: &mut Criterion) {
    let p = reference_params();
    let mut g = c.benchmark_group("negative_roots");
    for k in [50usize, 500, 2000] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| find_negative_modes(black_box(&p), k).unwrap())
        });
    }
    g.finish();
}

fn projection_and_evolution(c: &mut Criterion) {
    let basis = reference_basis(64, 2048);
    let coeffs = {
        let mut q = vec![0.0; 64];
        q[..8].copy_from_slice(&[1.0, -0.5, 0.25, 0.1, -0.05, 0.02, 0.01, -0.005]);
        stringmass_core::ModeCoefficients::from_real(basis.indices(), &q, &vec![0.0; 64]).unwrap()
    };
    let data = reconstruct(&coeffs, &basis, 0.0).unwrap();
    c.bench_function("project_64x2048", |b| {
        b.iter(|| project(black_box(&data), &basis).unwrap())
    });
    c.bench_function("evolve_modes_64x2048", |b| {
        b.iter(|| evolve_modes(black_box(&coeffs), &basis, 1.7).unwrap())
    });
    let p = reference_params();
    let mut g = c.benchmark_group("fd_evolve");
    g.sample_size(10);
    g.bench_function("t1_n2048", |b| {
        b.iter(|| fd_evolve(black_box(&data), &p, 2.5e-4, 1.0).unwrap())
    });
    g.finish();
}

fn fock(c: &mut Criterion) {
    let spec = reference_spectrum(500);
    c.bench_function("factorization_diagnostic_500", |b| {
        b.iter(|| factorization_diagnostic(black_box(&spec), 500).unwrap())
    });
}

criterion_group!(
    benches,
    calibration,
    secular_roots,
    projection_and_evolution,
    fock
);
criterion_main!(benches);
