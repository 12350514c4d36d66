use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::matcore::{self, ComplexMatrix};

/// Textbook quantum Fourier transform on `n` qubits: Hadamards, controlled
/// phases `CP(π/2^k)`, then the qubit-reversal swaps.
pub fn build_qft(n: usize) -> Result<Circuit> {
    if !(1..=10).contains(&n) {
        return Err(Error::Validation(format!("QFT width {n} outside [1, 10]")));
    }
    let mut circuit = Circuit::new(n)?;
    for j in 0..n {
        circuit.push(Gate::named("h", &[], &[j])?)?;
        for k in (j + 1)..n {
            let angle = PI / f64::from(1u32 << (k - j));
            circuit.push(Gate::named("cp", &[angle], &[k, j])?)?;
        }
    }
    for j in 0..n / 2 {
        circuit.push(Gate::named("swap", &[], &[j, n - 1 - j])?)?;
    }
    Ok(circuit)
}

/// DFT matrix with entries `ω^{jk}/√(2^n)`, `ω = e^{2πi/2^n}`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    ComplexMatrix::from_fn(dim, dim, |j, k| {
        let phase = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// One pulse `α_φ = exp(−i(α/2)(cos φ X + sin φ Y))`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pulse {
    pub angle: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        Self { pulses }
    }

    /// Flattened parameters `(α_1, …, α_m, φ_1, …, φ_m)`.
    pub fn to_params(&self) -> Vec<f64> {
        self.pulses
            .iter()
            .map(|p| p.angle)
            .chain(self.pulses.iter().map(|p| p.phase))
            .collect()
    }

    pub fn from_params(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) {
            return Err(Error::Validation(
                "pulse parameters come in (angle, phase) pairs".into(),
            ));
        }
        let m = params.len() / 2;
        Ok(Self::new(
            (0..m)
                .map(|i| Pulse {
                    angle: params[i],
                    phase: params[m + i],
                })
                .collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        let gates = self
            .pulses
            .iter()
            .map(|p| Gate::named("rot", &[p.angle, p.phase], &[0]))
            .collect::<Result<Vec<_>>>()?;
        Circuit::from_gates(1, gates)
    }

    /// Error-free product of the pulses.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        Ok(self.to_circuit()?.unitary().clone())
    }

    /// Distance to `R_X(β)` modulo global phase.
    pub fn distance_to_rx(&self, beta: f64) -> Result<f64> {
        let target = Gate::named("rx", &[beta], &[0])?.unitary().clone();
        Ok(matcore::phase_distance(&self.unitary()?, &target))
    }
}

/// Five-pulse sequence `(β/2)_0 π_φ1 2π_φ2 π_φ1 (β/2)_0` with
/// `φ1 = arccos(−β/(4π))`, `φ2 = 3φ1`, replacing `R_X(β)`.
pub fn build_jones_pulse(beta: f64) -> Result<PulseSequence> {
    if !(beta > 0.0 && beta <= PI) {
        return Err(Error::Validation(format!("target angle {beta} outside (0, π]")));
    }
    let phi1 = (-beta / (4.0 * PI)).acos();
    let phi2 = 3.0 * phi1;
    let p = |angle, phase| Pulse { angle, phase };
    Ok(PulseSequence::new(vec![
        p(beta / 2.0, 0.0),
        p(PI, phi1),
        p(2.0 * PI, phi2),
        p(PI, phi1),
        p(beta / 2.0, 0.0),
    ]))
}

/// Published five-pulse `R_X(π/4)` replacement optimized for independent
/// over-rotation errors.
pub fn build_reference_design_pulse() -> PulseSequence {
    let table = [
        (0.876, -1.43),
        (0.834, 0.126),
        (1.544, 1.985),
        (0.975, 0.031),
        (0.808, -1.68),
    ];
    PulseSequence::new(table.iter().map(|&(angle, phase)| Pulse { angle, phase }).collect())
}
