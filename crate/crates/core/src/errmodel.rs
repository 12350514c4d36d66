//! Set-membership coherent error models and interaction Hamiltonians.
//!
//! A model gives each layer `j` a list of basis matrices `B_{j,k}` with
//! `‖B_{j,k}‖ ≤ 1`; the error generator is `H_{e,j} = Σ_k θ_{j,k} B_{j,k}`.
//! Under the infinity-norm bound `|θ_{j,k}| ≤ δ/ℓ_j`, so `‖H_{e,j}‖ ≤ δ`.

use serde::{Deserialize, Serialize};

use crate::circuit::{embed_operator, Circuit};
use crate::error::{Error, Result};
use crate::matcore::{self, c, hermitian_norm, spectral_norm, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundNorm {
    /// `|θ_{j,k}| ≤ δ/ℓ_j`.
    Infinity,
    /// `‖θ_j‖₂ ≤ δ`.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Independent,
    /// One θ block shared by every layer.
    Systematic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::X => matcore::pauli_x(),
            Pauli::Y => matcore::pauli_y(),
            Pauli::Z => matcore::pauli_z(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Pauli(Pauli),
    /// Coherent control errors `H_{e,j} = θ_j H̄_j`.
    ControlError,
    Custom,
}

#[derive(Debug, Clone)]
pub struct CoherentErrorModel {
    kind: ModelKind,
    n: usize,
    layers: Vec<Vec<ComplexMatrix>>,
    delta: f64,
    bound_norm: BoundNorm,
    correlation: Correlation,
    /// Stored bases are the raw ones divided by `scale`.
    scale: f64,
}

/// Flat error parameter vector: layer blocks in order (independent) or the
/// single shared block (systematic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaAssignment {
    pub values: Vec<f64>,
}

impl ThetaAssignment {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl CoherentErrorModel {
    /// `P` errors on every qubit of every layer, `|θ_{j,k}| ≤ δ/n`.
    pub fn pauli(n: usize, layers: usize, pauli: Pauli, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("Pauli model needs at least one qubit".into()));
        }
        let p = pauli.matrix();
        let basis: Vec<ComplexMatrix> = (0..n).map(|q| embed_operator(&p, &[q], n)).collect::<Result<_>>()?;
        let mut model = Self::build(ModelKind::Pauli(pauli), n, vec![basis; layers], delta)?;
        model.scale = 1.0;
        Ok(model)
    }

    /// Coherent control errors on `circuit` with over-rotations
    /// `|θ_j| ≤ overrotation`.
    ///
    /// Generators are normalized by `s = max_j ‖H̄_j‖`, so `B_j = H̄_j / s`,
    /// the normalized coordinate is `s·θ_j`, and the Hamiltonian bound is
    /// `δ = s·overrotation`. A shared normalization keeps systematic errors
    /// equal to a common physical over-rotation. Layers with a zero generator
    /// carry no error (`ℓ_j = 0`).
    pub fn control_errors(circuit: &Circuit, overrotation: f64) -> Result<Self> {
        let generators: Vec<ComplexMatrix> = (0..circuit.len())
            .map(|j| circuit.layer_generator(j))
            .collect::<Result<_>>()?;
        let norms: Vec<f64> = generators.iter().map(hermitian_norm).collect();
        let scale = norms.iter().copied().fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Validation(
                "control-error model needs at least one non-trivial generator".into(),
            ));
        }
        let layers = generators
            .into_iter()
            .zip(&norms)
            .map(|(g, &norm)| {
                if norm <= 1e-14 {
                    Vec::new()
                } else {
                    vec![g * c(1.0 / scale, 0.0)]
                }
            })
            .collect();
        check_nonneg(overrotation)?;
        Ok(Self {
            kind: ModelKind::ControlError,
            n: circuit.n_qubits(),
            layers,
            delta: overrotation * scale,
            bound_norm: BoundNorm::Infinity,
            correlation: Correlation::Independent,
            scale,
        })
    }

    /// User-supplied full-register Hermitian bases per layer. If any basis
    /// element has norm above one, all are divided by the largest norm and
    /// the factor is folded into `δ`.
    pub fn custom(n: usize, layers: Vec<Vec<ComplexMatrix>>, delta: f64) -> Result<Self> {
        let dim = 1usize << n;
        for (j, layer) in layers.iter().enumerate() {
            for b in layer {
                if b.nrows() != dim || b.ncols() != dim {
                    return Err(Error::Dimension(format!(
                        "basis element of layer {j} is {}x{}, register needs {dim}x{dim}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                matcore::require_hermitian(b, &format!("basis element of layer {j}"))?;
            }
        }
        let max_norm = layers.iter().flatten().map(spectral_norm).fold(0.0, f64::max);
        let scale = if max_norm > 1.0 { max_norm } else { 1.0 };
        let layers = layers
            .into_iter()
            .map(|l| l.into_iter().map(|b| b * c(1.0 / scale, 0.0)).collect())
            .collect();
        let mut model = Self::build(ModelKind::Custom, n, layers, delta * scale)?;
        model.scale = scale;
        Ok(model)
    }

    fn build(kind: ModelKind, n: usize, layers: Vec<Vec<ComplexMatrix>>, delta: f64) -> Result<Self> {
        check_nonneg(delta)?;
        Ok(Self {
            kind,
            n,
            layers,
            delta,
            bound_norm: BoundNorm::Infinity,
            correlation: Correlation::Independent,
            scale: 1.0,
        })
    }

    pub fn with_correlation(mut self, correlation: Correlation) -> Result<Self> {
        if correlation == Correlation::Systematic {
            let ells: Vec<usize> = self.ells().into_iter().filter(|&l| l > 0).collect();
            if ells.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Validation(
                    "systematic errors need the same number of basis elements on every layer".into(),
                ));
            }
        }
        self.correlation = correlation;
        Ok(self)
    }

    pub fn with_bound_norm(mut self, bound_norm: BoundNorm) -> Self {
        self.bound_norm = bound_norm;
        self
    }

    /// Same model at a different Hamiltonian bound δ.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        check_nonneg(delta)?;
        self.delta = delta;
        Ok(self)
    }

    /// The model restricted to layers `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.layers.len() {
            return Err(Error::Validation(format!(
                "layer range {range:?} outside 0..{}",
                self.layers.len()
            )));
        }
        Ok(Self {
            layers: self.layers[range].to_vec(),
            kind: self.kind.clone(),
            ..*self
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<ComplexMatrix>] {
        &self.layers
    }

    /// Bound δ on `‖H_{e,j}‖`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn bound_norm(&self) -> BoundNorm {
        self.bound_norm
    }

    pub fn correlation(&self) -> Correlation {
        self.correlation
    }

    /// Normalization factor between raw and stored bases.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Raw-coordinate bound (for control errors: the over-rotation bound).
    pub fn raw_delta(&self) -> f64 {
        self.delta / self.scale
    }

    /// Maps a raw coordinate (e.g. a physical over-rotation) to the
    /// normalized one.
    pub fn to_normalized(&self, raw: f64) -> f64 {
        raw * self.scale
    }

    pub fn ells(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    fn shared_ell(&self) -> usize {
        self.ells().into_iter().max().unwrap_or(0)
    }

    /// Length of a [`ThetaAssignment`] for this model.
    pub fn n_params(&self) -> usize {
        match self.correlation {
            Correlation::Independent => self.ells().iter().sum(),
            Correlation::Systematic => self.shared_ell(),
        }
    }

    /// Half-widths `δ/ℓ_j` of the admissible box, one per parameter.
    pub fn half_widths(&self) -> Vec<f64> {
        self.unit_half_widths().into_iter().map(|w| w * self.delta).collect()
    }

    /// Half-widths at δ = 1.
    pub fn unit_half_widths(&self) -> Vec<f64> {
        match self.correlation {
            Correlation::Independent => self
                .ells()
                .into_iter()
                .flat_map(|l| std::iter::repeat_n(1.0 / l as f64, l))
                .collect(),
            Correlation::Systematic => {
                let l = self.shared_ell();
                vec![1.0 / l as f64; l]
            }
        }
    }

    /// Per-layer parameter blocks of an assignment.
    pub fn layer_blocks<'a>(&self, theta: &'a [f64]) -> Result<Vec<&'a [f64]>> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, model needs {}",
                theta.len(),
                self.n_params()
            )));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            let l = layer.len();
            match self.correlation {
                Correlation::Independent => {
                    out.push(&theta[offset..offset + l]);
                    offset += l;
                }
                Correlation::Systematic => out.push(&theta[..l]),
            }
        }
        Ok(out)
    }

    /// True if θ satisfies the model's norm bound (with absolute slack `tol`).
    pub fn is_admissible(&self, theta: &ThetaAssignment, tol: f64) -> bool {
        let Ok(blocks) = self.layer_blocks(&theta.values) else {
            return false;
        };
        blocks.iter().all(|block| match self.bound_norm {
            BoundNorm::Infinity => {
                let l = block.len() as f64;
                block.iter().all(|t| t.abs() <= self.delta / l + tol)
            }
            BoundNorm::Two => block.iter().map(|t| t * t).sum::<f64>().sqrt() <= self.delta + tol,
        })
    }

    /// Error generators `H_{e,j}(θ_j)`.
    pub fn layer_hamiltonians(&self, theta: &ThetaAssignment) -> Result<Vec<ComplexMatrix>> {
        let dim = 1usize << self.n;
        let blocks = self.layer_blocks(&theta.values)?;
        Ok(self
            .layers
            .iter()
            .zip(blocks)
            .map(|(basis, block)| {
                basis
                    .iter()
                    .zip(block)
                    .fold(matcore::zeros(dim, dim), |acc, (b, &t)| acc + b * c(t, 0.0))
            })
            .collect())
    }

    fn check_circuit(&self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n || circuit.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "model covers {} layer(s) on {} qubit(s), circuit has {} layer(s) on {} qubit(s)",
                self.layers.len(),
                self.n,
                circuit.len(),
                circuit.n_qubits()
            )));
        }
        Ok(())
    }
}

fn check_nonneg(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Validation(format!("error level {delta} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Pauli model on qubits of `circuit`; convenience wrapper sizing the model.
pub fn model_pauli(circuit: &Circuit, pauli: Pauli, delta: f64) -> Result<CoherentErrorModel> {
    CoherentErrorModel::pauli(circuit.n_qubits(), circuit.len(), pauli, delta)
}

/// Control-error model; `overrotation` bounds `|θ_j|` in `e^{-i(1+θ_j)H̄_j}`.
pub fn model_cce(circuit: &Circuit, overrotation: f64) -> Result<CoherentErrorModel> {
    CoherentErrorModel::control_errors(circuit, overrotation)
}

/// The linear map `θ ↦ (G_1(θ), …, G_N(θ))` for a fixed circuit and basis.
///
/// `terms[j][k]` is the basis element `k` of layer `j` conjugated into the
/// interaction frame. The same structure serves superoperator generators,
/// where the terms are not Hermitian.
#[derive(Debug, Clone)]
pub struct InteractionFamily {
    terms: Vec<Vec<ComplexMatrix>>,
    correlation: Correlation,
    hermitian: bool,
    dim: usize,
}

impl InteractionFamily {
    pub fn new(dim: usize, terms: Vec<Vec<ComplexMatrix>>, correlation: Correlation, hermitian: bool) -> Result<Self> {
        if terms.iter().flatten().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Dimension("interaction terms have mixed sizes".into()));
        }
        if correlation == Correlation::Systematic {
            let ells: Vec<usize> = terms.iter().map(Vec::len).filter(|&l| l > 0).collect();
            if ells.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Validation("systematic family needs uniform ℓ".into()));
            }
        }
        Ok(Self {
            terms,
            correlation,
            hermitian,
            dim,
        })
    }

    /// Interaction-frame terms `V̄_j† B_{j,k} V̄_j` of a coherent model.
    pub fn from_coherent(circuit: &Circuit, model: &CoherentErrorModel) -> Result<Self> {
        model.check_circuit(circuit)?;
        let terms = circuit
            .prefixes()
            .iter()
            .zip(model.layers())
            .map(|(v, basis)| {
                let vd = v.adjoint();
                basis.iter().map(|b| &vd * b * v).collect()
            })
            .collect();
        Self::new(circuit.dim(), terms, model.correlation(), true)
    }

    pub fn terms(&self) -> &[Vec<ComplexMatrix>] {
        &self.terms
    }

    pub fn correlation(&self) -> Correlation {
        self.correlation
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn n_layers(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ells(&self) -> Vec<usize> {
        self.terms.iter().map(Vec::len).collect()
    }

    pub fn n_params(&self) -> usize {
        match self.correlation {
            Correlation::Independent => self.terms.iter().map(Vec::len).sum(),
            Correlation::Systematic => self.terms.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// Half-widths of the unit box `|θ_{j,k}| ≤ 1/ℓ_j`.
    pub fn unit_half_widths(&self) -> Vec<f64> {
        match self.correlation {
            Correlation::Independent => self
                .terms
                .iter()
                .flat_map(|l| std::iter::repeat_n(1.0 / l.len() as f64, l.len()))
                .collect(),
            Correlation::Systematic => {
                let l = self.n_params();
                vec![1.0 / l as f64; l]
            }
        }
    }

    /// Operator norm matching the family (eigenvalues when Hermitian).
    pub fn norm(&self, m: &ComplexMatrix) -> f64 {
        if self.hermitian {
            hermitian_norm(m)
        } else {
            spectral_norm(m)
        }
    }

    fn blocks<'a>(&self, theta: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.terms.len());
        let mut offset = 0;
        for layer in &self.terms {
            let l = layer.len();
            match self.correlation {
                Correlation::Independent => {
                    out.push(&theta[offset..offset + l]);
                    offset += l;
                }
                Correlation::Systematic => out.push(&theta[..l]),
            }
        }
        out
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, family needs {}",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    /// `G_j(θ_j)` for every layer.
    pub fn layer_terms(&self, theta: &[f64]) -> Result<Vec<ComplexMatrix>> {
        self.check_len(theta)?;
        Ok(self
            .terms
            .iter()
            .zip(self.blocks(theta))
            .map(|(layer, block)| {
                layer
                    .iter()
                    .zip(block)
                    .fold(matcore::zeros(self.dim, self.dim), |acc, (m, &t)| acc + m * c(t, 0.0))
            })
            .collect())
    }

    /// Contribution of each parameter to the average `G`:
    /// `G(θ) = Σ_p θ_p D_p`.
    pub fn average_directions(&self) -> Vec<ComplexMatrix> {
        let n = self.terms.len().max(1) as f64;
        let inv_n = c(1.0 / n, 0.0);
        match self.correlation {
            Correlation::Independent => self
                .terms
                .iter()
                .flat_map(|layer| layer.iter().map(|m| m * inv_n))
                .collect(),
            Correlation::Systematic => (0..self.n_params())
                .map(|k| {
                    self.terms
                        .iter()
                        .filter(|layer| !layer.is_empty())
                        .fold(matcore::zeros(self.dim, self.dim), |acc, layer| acc + &layer[k])
                        * inv_n
                })
                .collect(),
        }
    }

    /// Averaged interaction operator `G(θ) = (1/N) Σ_j G_j(θ_j)`.
    pub fn average(&self, theta: &[f64]) -> Result<ComplexMatrix> {
        self.check_len(theta)?;
        let n = self.terms.len().max(1) as f64;
        let sum = self
            .layer_terms(theta)?
            .into_iter()
            .fold(matcore::zeros(self.dim, self.dim), |acc, g| acc + g);
        Ok(sum * c(1.0 / n, 0.0))
    }
}

/// `G_j = V̄_j† H_{e,j}(θ_j) V̄_j` for every layer.
pub fn interaction_hamiltonians(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    theta: &ThetaAssignment,
) -> Result<Vec<ComplexMatrix>> {
    InteractionFamily::from_coherent(circuit, model)?.layer_terms(&theta.values)
}

/// Averaged interaction Hamiltonian `G = (1/N) Σ_j G_j`.
pub fn averaged_g(circuit: &Circuit, model: &CoherentErrorModel, theta: &ThetaAssignment) -> Result<ComplexMatrix> {
    InteractionFamily::from_coherent(circuit, model)?.average(&theta.values)
}

/// Noisy circuit `Π_j Ū_j e^{-iH_{e,j}(θ_j)}`.
pub fn noisy_unitary(circuit: &Circuit, model: &CoherentErrorModel, theta: &ThetaAssignment) -> Result<ComplexMatrix> {
    model.check_circuit(circuit)?;
    let hamiltonians = model.layer_hamiltonians(theta)?;
    let mut acc = matcore::identity(circuit.dim());
    for (u, h) in circuit.layer_unitaries().iter().zip(&hamiltonians) {
        let err = if h.iter().all(|z| *z == matcore::ZERO) {
            acc.clone()
        } else {
            matcore::herm_exp(h)? * &acc
        };
        acc = u * err;
    }
    Ok(acc)
}
