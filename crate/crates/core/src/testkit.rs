//! Seeded random inputs shared by the unit and property tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::circuit::Gate;
use crate::matcore::{c, ComplexMatrix};

const ONE_QUBIT: &[&str] = &["h", "x", "sx", "rx", "ry", "rz", "p", "rot"];
const TWO_QUBIT: &[&str] = &["cx", "cz", "cp", "rzz", "swap", "iswap"];

fn params(name: &str) -> usize {
    crate::circuit::gates::lookup(name).expect("known gate").params
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
