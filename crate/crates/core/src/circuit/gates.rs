//! Standard gate library: unitaries together with their analytic generators.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{self, c, identity, kron, pauli_x, pauli_y, pauli_z, ComplexMatrix, I, ONE, ZERO};

/// Static description of a named gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSpec {
    pub name: &'static str,
    pub qubits: usize,
    pub params: usize,
}

pub const GATE_SPECS: &[GateSpec] = &[
    GateSpec {
        name: "id",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "h",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "x",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "y",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "z",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "sx",
        qubits: 1,
        params: 0,
    },
    GateSpec {
        name: "rx",
        qubits: 1,
        params: 1,
    },
    GateSpec {
        name: "ry",
        qubits: 1,
        params: 1,
    },
    GateSpec {
        name: "rz",
        qubits: 1,
        params: 1,
    },
    GateSpec {
        name: "p",
        qubits: 1,
        params: 1,
    },
    GateSpec {
        name: "rot",
        qubits: 1,
        params: 2,
    },
    GateSpec {
        name: "cp",
        qubits: 2,
        params: 1,
    },
    GateSpec {
        name: "cz",
        qubits: 2,
        params: 0,
    },
    GateSpec {
        name: "cx",
        qubits: 2,
        params: 0,
    },
    GateSpec {
        name: "swap",
        qubits: 2,
        params: 0,
    },
    GateSpec {
        name: "rzz",
        qubits: 2,
        params: 1,
    },
    GateSpec {
        name: "iswap",
        qubits: 2,
        params: 0,
    },
];

pub fn lookup(name: &str) -> Option<&'static GateSpec> {
    GATE_SPECS.iter().find(|s| s.name == name)
}

fn real(rows: usize, entries: &[f64]) -> ComplexMatrix {
    matcore::from_real_rows(rows, rows, entries).expect("static gate table")
}

fn diag(entries: &[Complex64]) -> ComplexMatrix {
    let d = entries.len();
    let mut m = matcore::zeros(d, d);
    for (i, z) in entries.iter().enumerate() {
        m[(i, i)] = *z;
    }
    m
}

fn swap_matrix() -> ComplexMatrix {
    real(4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.])
}

fn hadamard() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    real(2, &[s, s, s, -s])
}

/// Unitary and Hermitian generator (`e^{-iH} = U`) of a named gate.
pub fn unitary_and_generator(name: &str, params: &[f64]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let spec = lookup(name).ok_or_else(|| Error::Validation(format!("unknown gate '{name}'")))?;
    if params.len() != spec.params {
        return Err(Error::Validation(format!(
            "gate '{name}' takes {} parameter(s), got {}",
            spec.params,
            params.len()
        )));
    }
    let id2 = identity(2);
    let half_pi = c(PI / 2.0, 0.0);
    let pair = match name {
        "id" => (id2.clone(), matcore::zeros(2, 2)),
        "h" => {
            let h = hadamard();
            let g = (&id2 - &h) * half_pi;
            (h, g)
        }
        "x" | "y" | "z" => {
            let p = match name {
                "x" => pauli_x(),
                "y" => pauli_y(),
                _ => pauli_z(),
            };
            let g = (&id2 - &p) * half_pi;
            (p, g)
        }
        "sx" => {
            let a = c(0.5, 0.5);
            let b = c(0.5, -0.5);
            let u = ComplexMatrix::from_row_slice(2, 2, &[a, b, b, a]);
            let g = (&id2 - pauli_x()) * c(-PI / 4.0, 0.0);
            (u, g)
        }
        "rx" | "ry" | "rz" => {
            let theta = params[0];
            let p = match name {
                "rx" => pauli_x(),
                "ry" => pauli_y(),
                _ => pauli_z(),
            };
            let u = &id2 * c((theta / 2.0).cos(), 0.0) - &p * (I * (theta / 2.0).sin());
            (u, p * c(theta / 2.0, 0.0))
        }
        "p" => {
            let theta = params[0];
            let u = diag(&[ONE, Complex64::from_polar(1.0, theta)]);
            let g = diag(&[ZERO, c(-theta, 0.0)]);
            (u, g)
        }
        "rot" => {
            let (alpha, phi) = (params[0], params[1]);
            let axis = pauli_x() * c(phi.cos(), 0.0) + pauli_y() * c(phi.sin(), 0.0);
            let u = &id2 * c((alpha / 2.0).cos(), 0.0) - &axis * (I * (alpha / 2.0).sin());
            (u, axis * c(alpha / 2.0, 0.0))
        }
        "cp" => {
            let theta = params[0];
            let u = diag(&[ONE, ONE, ONE, Complex64::from_polar(1.0, theta)]);
            let g = diag(&[ZERO, ZERO, ZERO, c(-theta, 0.0)]);
            (u, g)
        }
        "cz" => {
            let u = diag(&[ONE, ONE, ONE, -ONE]);
            let g = diag(&[ZERO, ZERO, ZERO, c(PI, 0.0)]);
            (u, g)
        }
        "cx" => {
            let u = real(4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]);
            let one_proj = real(2, &[0., 0., 0., 1.]);
            let g = kron(&one_proj, &(&id2 - pauli_x())) * half_pi;
            (u, g)
        }
        "swap" => {
            let s = swap_matrix();
            let g = (identity(4) - &s) * half_pi;
            (s, g)
        }
        "rzz" => {
            let theta = params[0];
            let zz = kron(&pauli_z(), &pauli_z());
            let u = identity(4) * c((theta / 2.0).cos(), 0.0) - &zz * (I * (theta / 2.0).sin());
            (u, zz * c(theta / 2.0, 0.0))
        }
        "iswap" => {
            let u = ComplexMatrix::from_row_slice(
                4,
                4,
                &[
                    ONE, ZERO, ZERO, ZERO, ZERO, ZERO, I, ZERO, ZERO, I, ZERO, ZERO, ZERO, ZERO, ZERO, ONE,
                ],
            );
            let g = (kron(&pauli_x(), &pauli_x()) + kron(&pauli_y(), &pauli_y())) * c(-PI / 4.0, 0.0);
            (u, g)
        }
        _ => unreachable!("gate table and match are out of sync"),
    };
    Ok(pair)
}
