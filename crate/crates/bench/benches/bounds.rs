use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qrobust_core::circuit::{build_jones_pulse, build_qft};
use qrobust_core::cohbound::{bound_direct, gamma_norm, gamma_opt, gamma_vertex};
use qrobust_core::design::{design, DesignProblem};
use qrobust_core::errmodel::{model_cce, model_pauli, Pauli};
use qrobust_core::matcore::{self, herm_exp, ComplexMatrix};
use qrobust_core::mcsample::sample_fidelity;
use qrobust_core::optkit::OptSettings;
use qrobust_core::partition::{gamma_partitioned, PartitionPlan};

fn quick(starts: usize) -> OptSettings {
    OptSettings {
        starts,
        ..OptSettings::default()
    }
}

fn matrix_exponential(c: &mut Criterion) {
    let mut group = c.benchmark_group("herm_exp");
    for n in [1, 2, 3, 4] {
        let dim = 1usize << n;
        let h = ComplexMatrix::from_fn(dim, dim, |i, j| {
            matcore::c((i + j) as f64 * 0.1, i as f64 * 0.05 - j as f64 * 0.05)
        });
        let h = (&h + h.adjoint()) * matcore::c(0.5, 0.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| herm_exp(black_box(h)))
        });
    }
    group.finish();
}

fn gamma_methods(c: &mut Criterion) {
    let qft = build_qft(3).unwrap();
    let model = model_cce(&qft, 1e-3).unwrap();
    let mut group = c.benchmark_group("gamma_qft3_cce");
    group.bench_function("vertex", |b| b.iter(|| gamma_vertex(&qft, &model)));
    group.bench_function("opt_20_starts", |b| b.iter(|| gamma_opt(&qft, &model, &quick(20))));
    group.bench_function("norm", |b| b.iter(|| gamma_norm(&qft, &model)));
    let pauli = model_pauli(&qft, Pauli::Z, 1e-3).unwrap();
    let plan = PartitionPlan::auto(&pauli, 12).unwrap();
    group.bench_function("partition_pauli_z", |b| {
        b.iter(|| gamma_partitioned(&qft, &pauli, &plan, 12, &quick(20)))
    });
    group.finish();
}

fn direct_bound(c: &mut Criterion) {
    let jones = build_jones_pulse(PI / 4.0).unwrap().to_circuit().unwrap();
    let model = model_cce(&jones, 0.05).unwrap();
    c.bench_function("direct_bound_jones_vertex", |b| {
        b.iter(|| bound_direct(&jones, &model, &quick(20)))
    });
}

fn sampling(c: &mut Criterion) {
    let qft = build_qft(3).unwrap();
    let model = model_pauli(&qft, Pauli::X, 0.01).unwrap();
    c.bench_function("sample_qft3_1000", |b| {
        b.iter(|| sample_fidelity(&qft, &model, 1000, 7))
    });
}

fn composite_pulse_design(c: &mut Criterion) {
    let problem = DesignProblem::composite_pulse(PI / 4.0, 0.05, 0.999995, Some(1e-3)).unwrap();
    let mut group = c.benchmark_group("design");
    group.sample_size(10);
    group.bench_function("composite_pulse_2_starts", |b| b.iter(|| design(&problem, &quick(2))));
    group.finish();
}

criterion_group!(
    benches,
    matrix_exponential,
    gamma_methods,
    direct_bound,
    sampling,
    composite_pulse_design
);
criterion_main!(benches);
