//! Shared test corpus: seeded random circuits and the named instances.
#![allow(dead_code)]

use qrobust_core::circuit::{build_jones_pulse, build_qft, build_reference_design_pulse};
use qrobust_core::errmodel::{model_cce, model_pauli, CoherentErrorModel, Correlation, Pauli};
use qrobust_core::matcore::{c, ComplexMatrix};
use qrobust_core::{Circuit, Gate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const ONE_QUBIT: &[&str] = &["h", "x", "sx", "rx", "ry", "rz", "p", "rot"];
const TWO_QUBIT: &[&str] = &["cx", "cz", "cp", "rzz", "swap", "iswap"];

fn params(name: &str) -> usize {
    qrobust_core::circuit::gates::lookup(name).expect("known gate").params
}

pub fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    let two = n >= 2 && rng.random_bool(0.4);
    let name = if two {
        TWO_QUBIT[rng.random_range(0..TWO_QUBIT.len())]
    } else {
        ONE_QUBIT[rng.random_range(0..ONE_QUBIT.len())]
    };
    let angles: Vec<f64> = (0..params(name)).map(|_| rng.random_range(-PI..PI)).collect();
    let support: Vec<usize> = if two {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        vec![a, b]
    } else {
        vec![rng.random_range(0..n)]
    };
    Gate::named(name, &angles, &support).expect("valid gate")
}

/// Random circuit with `n` qubits and `layers` gates.
pub fn random_circuit_sized(seed: u64, n: usize, layers: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..layers).map(|_| random_gate(&mut rng, n)).collect();
    Circuit::from_gates(n, gates).expect("valid circuit")
}

/// Random circuit with `n ≤ 3` qubits and `N ≤ 12` layers.
pub fn random_circuit(seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(1..=3);
    let layers = rng.random_range(1..=12);
    random_circuit_sized(seed, n, layers)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (a.clone() + a.adjoint()) * c(scale / 2.0, 0.0)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub struct Instance {
    pub name: String,
    pub circuit: Circuit,
    pub model: CoherentErrorModel,
}

impl Instance {
    fn new(name: impl Into<String>, circuit: Circuit, model: CoherentErrorModel) -> Self {
        Self {
            name: name.into(),
            circuit,
            model,
        }
    }
}

/// Pauli models cycle X, Y, Z, then control errors.
fn model_for(k: usize, circuit: &Circuit, delta: f64) -> (String, CoherentErrorModel) {
    match k % 4 {
        0 => ("pauli-x".into(), model_pauli(circuit, Pauli::X, delta).unwrap()),
        1 => ("pauli-y".into(), model_pauli(circuit, Pauli::Y, delta).unwrap()),
        2 => ("pauli-z".into(), model_pauli(circuit, Pauli::Z, delta).unwrap()),
        _ => ("cce".into(), model_cce(circuit, delta).unwrap()),
    }
}

/// Soundness corpus: 16 random circuits plus the named instances.
pub fn corpus() -> Vec<Instance> {
    let mut out = Vec::new();
    for k in 0..16usize {
        let circuit = random_circuit(1000 + k as u64);
        let (label, model) = model_for(k, &circuit, 0.02);
        let name = format!("random-{k} (n={}, N={}) {label}", circuit.n_qubits(), circuit.len());
        out.push(Instance::new(name, circuit, model));
    }
    let qft = build_qft(3).unwrap();
    out.push(Instance::new(
        "qft3 pauli-z",
        qft.clone(),
        model_pauli(&qft, Pauli::Z, 0.005).unwrap(),
    ));
    out.push(Instance::new("qft3 cce", qft.clone(), model_cce(&qft, 0.01).unwrap()));
    let jones = build_jones_pulse(PI / 4.0).unwrap().to_circuit().unwrap();
    out.push(Instance::new(
        "jones cce",
        jones.clone(),
        model_cce(&jones, 0.05).unwrap(),
    ));
    out.push(Instance::new(
        "jones cce systematic",
        jones.clone(),
        model_cce(&jones, 0.05)
            .unwrap()
            .with_correlation(Correlation::Systematic)
            .unwrap(),
    ));
    out.push(Instance::new(
        "jones pauli-x",
        jones.clone(),
        model_pauli(&jones, Pauli::X, 0.05).unwrap(),
    ));
    let designed = build_reference_design_pulse().to_circuit().unwrap();
    out.push(Instance::new(
        "designed cce",
        designed.clone(),
        model_cce(&designed, 0.05).unwrap(),
    ));
    out.push(Instance::new(
        "designed cce systematic",
        designed.clone(),
        model_cce(&designed, 0.05)
            .unwrap()
            .with_correlation(Correlation::Systematic)
            .unwrap(),
    ));
    out
}
