//! Circuit data model.
//!
//! A [`Circuit`] is an ordered list of layers `Ū_1, …, Ū_N`; one [`Gate`] is
//! one layer. Qubit 0 is the leftmost Kronecker factor, so `x 0` on two qubits
//! is `X ⊗ I`. Gates acting on disjoint qubits are merged into one layer only
//! through [`Gate::parallel`].

mod builders;
pub mod gates;
pub mod qasm;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::matcore::{self, herm_exp, principal_log_unitary, spectral_norm, ComplexMatrix};

pub use builders::{build_jones_pulse, build_qft, build_reference_design_pulse, dft_matrix, Pulse, PulseSequence};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// A gate from the standard library, printable in the text format.
    Named { name: String, params: Vec<f64> },
    /// Several gates on disjoint qubits fused into one layer.
    Parallel(Vec<Gate>),
    /// A user-supplied unitary.
    Custom { label: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    support: Vec<usize>,
    unitary: ComplexMatrix,
    generator: Option<ComplexMatrix>,
}

impl Gate {
    /// A named gate from the standard library.
    pub fn named(name: &str, params: &[f64], support: &[usize]) -> Result<Self> {
        let spec = gates::lookup(name).ok_or_else(|| Error::Validation(format!("unknown gate '{name}'")))?;
        if support.len() != spec.qubits {
            return Err(Error::Validation(format!(
                "gate '{name}' acts on {} qubit(s), got {}",
                spec.qubits,
                support.len()
            )));
        }
        check_distinct(support)?;
        let (unitary, generator) = gates::unitary_and_generator(name, params)?;
        Ok(Self {
            kind: GateKind::Named {
                name: name.to_string(),
                params: params.to_vec(),
            },
            support: support.to_vec(),
            unitary,
            generator: Some(generator),
        })
    }

    /// A user-supplied unitary. Without an explicit generator the principal
    /// logarithm is used.
    pub fn custom(
        label: &str,
        unitary: ComplexMatrix,
        support: &[usize],
        generator: Option<ComplexMatrix>,
    ) -> Result<Self> {
        check_distinct(support)?;
        let dim = 1usize << support.len();
        if unitary.nrows() != dim || unitary.ncols() != dim {
            return Err(Error::Dimension(format!(
                "gate '{label}' on {} qubit(s) needs a {dim}x{dim} unitary",
                support.len()
            )));
        }
        matcore::require_unitary(&unitary, label)?;
        let generator = match generator {
            Some(g) => {
                let err = spectral_norm(&(herm_exp(&g)? - &unitary));
                if err > matcore::TOLERANCES.unitary {
                    return Err(Error::Validation(format!(
                        "generator of '{label}' does not exponentiate to its unitary (error {err:.2e})"
                    )));
                }
                g
            }
            None => principal_log_unitary(&unitary)?.generator,
        };
        Ok(Self {
            kind: GateKind::Custom {
                label: label.to_string(),
            },
            support: support.to_vec(),
            unitary,
            generator: Some(generator),
        })
    }

    /// Fuses gates on pairwise disjoint qubits into a single layer.
    pub fn parallel(parts: Vec<Gate>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Validation("parallel layer needs at least one gate".into()));
        }
        let support: Vec<usize> = parts.iter().flat_map(|g| g.support.iter().copied()).collect();
        check_distinct(&support)?;
        let unitary = matcore::kron_all(parts.iter().map(|g| &g.unitary));
        // Generators on disjoint supports commute, so they add.
        let mut generator = matcore::zeros(unitary.nrows(), unitary.ncols());
        let mut offset = 0;
        for part in &parts {
            let m = part.support.len();
            let local: Vec<usize> = (offset..offset + m).collect();
            let g = part.generator.as_ref().ok_or(Error::MissingGenerator { layer: 0 })?;
            generator += embed_operator(g, &local, support.len())?;
            offset += m;
        }
        Ok(Self {
            kind: GateKind::Parallel(parts),
            support,
            unitary,
            generator: Some(generator),
        })
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        match &self.kind {
            GateKind::Named { name, .. } => name.clone(),
            GateKind::Parallel(parts) => {
                let names: Vec<String> = parts.iter().map(|g| g.label()).collect();
                format!("par[{}]", names.join(","))
            }
            GateKind::Custom { label } => label.clone(),
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn generator(&self) -> Option<&ComplexMatrix> {
        self.generator.as_ref()
    }
}

fn check_distinct(support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Validation("gate support is empty".into()));
    }
    for (i, q) in support.iter().enumerate() {
        if support[..i].contains(q) {
            return Err(Error::Validation(format!("qubit {q} repeated in gate support")));
        }
    }
    Ok(())
}

/// Embeds an operator acting on `support` into the full `2^n` register.
pub fn embed_operator(op: &ComplexMatrix, support: &[usize], n: usize) -> Result<ComplexMatrix> {
    let m = support.len();
    if op.nrows() != 1 << m || op.ncols() != 1 << m {
        return Err(Error::Dimension(format!(
            "operator of size {}x{} does not act on {m} qubit(s)",
            op.nrows(),
            op.ncols()
        )));
    }
    if let Some(&q) = support.iter().find(|&&q| q >= n) {
        return Err(Error::Validation(format!("qubit {q} outside register of width {n}")));
    }
    // Fast path: contiguous ascending support.
    if support.windows(2).all(|w| w[1] == w[0] + 1) {
        let left = matcore::identity(1 << support[0]);
        let right = matcore::identity(1 << (n - support[0] - m));
        return Ok(matcore::kron(&matcore::kron(&left, op), &right));
    }
    let dim = 1usize << n;
    let masks: Vec<usize> = support.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let support_mask: usize = masks.iter().sum();
    let sub_index = |state: usize| {
        masks
            .iter()
            .fold(0usize, |acc, &mask| (acc << 1) | usize::from(state & mask != 0))
    };
    let spread = |sub: usize| {
        masks.iter().enumerate().fold(
            0usize,
            |acc, (k, &mask)| {
                if sub & (1 << (m - 1 - k)) != 0 {
                    acc | mask
                } else {
                    acc
                }
            },
        )
    };
    let mut out = matcore::zeros(dim, dim);
    for col in 0..dim {
        let rest = col & !support_mask;
        let s_col = sub_index(col);
        for s_row in 0..(1 << m) {
            let v = op[(s_row, s_col)];
            if v != matcore::ZERO {
                out[(rest | spread(s_row), col)] = v;
            }
        }
    }
    Ok(out)
}

/// Full-register unitary of a gate.
pub fn embed(gate: &Gate, n: usize) -> Result<ComplexMatrix> {
    embed_operator(&gate.unitary, &gate.support, n)
}

#[derive(Debug, Clone)]
struct LayerCache {
    unitaries: Vec<ComplexMatrix>,
    prefixes: Vec<ComplexMatrix>,
    total: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    cache: OnceLock<LayerCache>,
}

impl PartialEq for Circuit {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.gates == other.gates
    }
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 12 {
            return Err(Error::Validation(format!("qubit count {n} outside [1, 12]")));
        }
        Ok(Self {
            n,
            gates: Vec::new(),
            cache: OnceLock::new(),
        })
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut circuit = Self::new(n)?;
        for g in gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.support.iter().find(|&&q| q >= self.n) {
            return Err(Error::Validation(format!(
                "qubit {q} outside register of width {}",
                self.n
            )));
        }
        self.gates.push(gate);
        self.cache = OnceLock::new();
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of layers N.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Sub-circuit made of the layers in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Circuit> {
        Circuit::from_gates(self.n, self.gates[range].to_vec())
    }

    fn cache(&self) -> &LayerCache {
        self.cache.get_or_init(|| {
            let unitaries: Vec<ComplexMatrix> = self
                .gates
                .iter()
                .map(|g| embed(g, self.n).expect("support validated on push"))
                .collect();
            let mut prefixes = Vec::with_capacity(unitaries.len());
            let mut acc = matcore::identity(self.dim());
            for u in &unitaries {
                prefixes.push(acc.clone());
                acc = u * &acc;
            }
            LayerCache {
                unitaries,
                prefixes,
                total: acc,
            }
        })
    }

    /// Embedded layer unitaries `Ū_1, …, Ū_N`.
    pub fn layer_unitaries(&self) -> &[ComplexMatrix] {
        &self.cache().unitaries
    }

    /// Prefix products `V̄_1 = I`, `V̄_k = Ū_{k−1} ⋯ Ū_1`.
    pub fn prefixes(&self) -> &[ComplexMatrix] {
        &self.cache().prefixes
    }

    /// Total unitary `Ū = Ū_N ⋯ Ū_1`.
    pub fn unitary(&self) -> &ComplexMatrix {
        &self.cache().total
    }

    /// Embedded generator `H̄_j` of layer `j` (0-based).
    pub fn layer_generator(&self, j: usize) -> Result<ComplexMatrix> {
        let gate = &self.gates[j];
        let g = gate.generator.as_ref().ok_or(Error::MissingGenerator { layer: j })?;
        embed_operator(g, &gate.support, self.n)
    }
}
