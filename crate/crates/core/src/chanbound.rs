//! Fidelity bounds for circuits of quantum channels with Markovian errors.
//!
//! Channels act on column-stacked density matrices: `vec(AρB) = (Bᵀ⊗A) vec(ρ)`,
//! so a Kraus channel `{E_k}` is `Σ_k E_k* ⊗ E_k`. Layer `j` is `Ā_j e^{M_j}`;
//! with `V̄_j = Ā_{j−1}⋯Ā_1` the interaction generators are
//! `calG_j = V̄_j⁻¹ M_j V̄_j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::cohbound::{self, GammaMethod, GammaResult};
use crate::errmodel::{Correlation, InteractionFamily};
use crate::error::{Error, Result};
use crate::matcore::{
    self, c, commutator, condition_number, hermitian_eigen, kron, psd_sqrt, spectral_norm, unvec, ComplexMatrix,
    ComplexVector,
};
use crate::optkit::{self, OptSettings};

/// Matrix acting on `vec(ρ)` for `ρ` of size `2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: ComplexMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let size = matrix.nrows();
        let dim = (size as f64).sqrt().round() as usize;
        if matrix.ncols() != size || dim * dim != size || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "superoperator must be 4^n x 4^n, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, dim })
    }

    /// `U* ⊗ U`.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        matcore::require_unitary(u, "unitary channel")?;
        Self::from_matrix(kron(&u.map(|z| z.conj()), u))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: matcore::identity(dim * dim),
            dim,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Side length of the density matrices it acts on.
    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Dimension(format!(
                "state is {}x{}, channel acts on {}x{}",
                rho.nrows(),
                rho.ncols(),
                self.dim,
                self.dim
            )));
        }
        unvec(&(&self.matrix * matcore::vec(rho)), self.dim, self.dim)
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Superoperator) -> Result<Superoperator> {
        if self.dim != first.dim {
            return Err(Error::Dimension("composing channels of different sizes".into()));
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
            dim: self.dim,
        })
    }

    /// Largest deviation of `vec(I)† A` from `vec(I)†`.
    pub fn trace_preservation_error(&self) -> f64 {
        let id = matcore::vec(&matcore::identity(self.dim));
        let row = id.adjoint() * &self.matrix;
        (row - id.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `Σ_k E_k* ⊗ E_k`.
pub fn kraus_to_superop(kraus: &[ComplexMatrix]) -> Result<Superoperator> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Validation("Kraus list is empty".into()))?;
    let dim = first.nrows();
    for (k, e) in kraus.iter().enumerate() {
        if e.nrows() != dim || e.ncols() != dim {
            return Err(Error::Dimension(format!(
                "Kraus operator {k} is {}x{}, expected {dim}x{dim}",
                e.nrows(),
                e.ncols()
            )));
        }
    }
    let matrix = kraus.iter().fold(matcore::zeros(dim * dim, dim * dim), |acc, e| {
        acc + kron(&e.map(|z| z.conj()), e)
    });
    Superoperator::from_matrix(matrix)
}

/// `‖Σ_k E_k† E_k − I‖`; zero for trace-preserving channels.
pub fn kraus_completeness_error(kraus: &[ComplexMatrix]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let sum = kraus
        .iter()
        .fold(matcore::zeros(first.nrows(), first.ncols()), |acc, e| {
            acc + e.adjoint() * e
        });
    spectral_norm(&(sum - matcore::identity(first.nrows())))
}

/// `ρ̇ = −i[K, ρ] + Σ_k (2 L_k ρ L_k† − L_k†L_k ρ − ρ L_k†L_k)`, evolved for unit time.
#[derive(Debug, Clone)]
pub struct LindbladChannel {
    k: ComplexMatrix,
    dissipators: Vec<ComplexMatrix>,
}

impl LindbladChannel {
    pub fn new(k: ComplexMatrix, dissipators: Vec<ComplexMatrix>) -> Result<Self> {
        matcore::require_hermitian(&k, "Lindblad Hamiltonian")?;
        for (i, l) in dissipators.iter().enumerate() {
            if l.shape() != k.shape() {
                return Err(Error::Dimension(format!(
                    "dissipator {i} is {}x{}, Hamiltonian is {}x{}",
                    l.nrows(),
                    l.ncols(),
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        Ok(Self { k, dissipators })
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.k
    }

    pub fn dissipators(&self) -> &[ComplexMatrix] {
        &self.dissipators
    }
}

/// Generator `M` with `vec(ρ(1)) = e^{M} vec(ρ(0))`:
/// `M = −i(I⊗K − K*⊗I) + Σ_k 2 L_k*⊗L_k − I⊗L_k†L_k − (L_k†L_k)ᵀ⊗I`.
pub fn lindblad_generator(ch: &LindbladChannel) -> ComplexMatrix {
    let dim = ch.k.nrows();
    let id = matcore::identity(dim);
    let k_conj = ch.k.map(|z| z.conj());
    let mut m = (kron(&id, &ch.k) - kron(&k_conj, &id)) * c(0.0, -1.0);
    for l in &ch.dissipators {
        let ldl = l.adjoint() * l;
        m += kron(&l.map(|z| z.conj()), l) * c(2.0, 0.0);
        m -= kron(&id, &ldl);
        m -= kron(&ldl.transpose(), &id);
    }
    m
}

/// Superoperators `U_j* ⊗ U_j` of a circuit's layers.
pub fn circuit_superoperators(circuit: &Circuit) -> Result<Vec<Superoperator>> {
    circuit
        .layer_unitaries()
        .iter()
        .map(Superoperator::from_unitary)
        .collect()
}

/// Prefix products `V̄_j` and their inverses, checking invertibility.
fn prefix_frames(layers: &[Superoperator]) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
    let Some(first) = layers.first() else {
        return Ok(Vec::new());
    };
    let size = first.matrix.nrows();
    let mut frames = Vec::with_capacity(layers.len());
    let mut v = matcore::identity(size);
    let mut v_inv = matcore::identity(size);
    for (j, layer) in layers.iter().enumerate() {
        if layer.matrix.nrows() != size {
            return Err(Error::Dimension(format!("layer {j} has a different size")));
        }
        frames.push((v.clone(), v_inv.clone()));
        let cond = condition_number(&layer.matrix);
        if cond.is_nan() || cond > matcore::TOLERANCES.max_condition {
            return Err(Error::Singular {
                layer: j,
                condition: cond,
            });
        }
        if j + 1 < layers.len() {
            let inv = layer.matrix.clone().try_inverse().ok_or(Error::Singular {
                layer: j,
                condition: cond,
            })?;
            v = &layer.matrix * v;
            v_inv *= inv;
        }
    }
    Ok(frames)
}

/// `Ā_N ⋯ Ā_1`.
pub fn compose(layers: &[Superoperator]) -> Result<Superoperator> {
    let first = layers
        .first()
        .ok_or_else(|| Error::Validation("need at least one layer".into()))?;
    layers[1..].iter().try_fold(first.clone(), |acc, l| l.after(&acc))
}

/// Noisy operation `Ā_N e^{M_N} ⋯ Ā_1 e^{M_1}`.
pub fn noisy_channel(layers: &[Superoperator], generators: &[ComplexMatrix]) -> Result<Superoperator> {
    if layers.len() != generators.len() || layers.is_empty() {
        return Err(Error::Dimension(format!(
            "{} layer(s) but {} error generator(s)",
            layers.len(),
            generators.len()
        )));
    }
    let mut acc = Superoperator::identity(layers[0].dim);
    for (layer, m) in layers.iter().zip(generators) {
        let err = Superoperator::from_matrix(matcore::gen_exp(m)?)?;
        acc = layer.after(&err.after(&acc)?)?;
    }
    Ok(acc)
}

/// Interaction generators `calG_j` and their average.
#[derive(Debug, Clone)]
pub struct ChannelInteraction {
    pub layers: Vec<ComplexMatrix>,
    pub average: ComplexMatrix,
}

pub fn channel_interaction_generators(
    layers: &[Superoperator],
    generators: &[ComplexMatrix],
) -> Result<ChannelInteraction> {
    if layers.len() != generators.len() || layers.is_empty() {
        return Err(Error::Dimension(format!(
            "{} layer(s) but {} error generator(s)",
            layers.len(),
            generators.len()
        )));
    }
    let frames = prefix_frames(layers)?;
    let size = layers[0].matrix.nrows();
    let mut out = Vec::with_capacity(layers.len());
    for (j, ((v, v_inv), m)) in frames.iter().zip(generators).enumerate() {
        if m.nrows() != size || m.ncols() != size {
            return Err(Error::Dimension(format!("error generator {j} has the wrong size")));
        }
        out.push(v_inv * m * v);
    }
    let average = out.iter().fold(matcore::zeros(size, size), |acc, g| acc + g) * c(1.0 / out.len() as f64, 0.0);
    Ok(ChannelInteraction { layers: out, average })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelBoundKind {
    /// For one error instance.
    Instance,
    /// Over all admissible errors, unitary layers only.
    WorstCase,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelBoundTerms {
    pub n_qubits: usize,
    pub layers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutator_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Lower bound on the minimal fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBoundResult {
    pub value: f64,
    pub kind: ChannelBoundKind,
    pub terms: ChannelBoundTerms,
}

/// `1 − 2ⁿ(½ Σ_j ‖Σ_{k>j} [calG_j, calG_k]‖ + 2^{n/2} N ‖calG‖)`.
pub fn bound_channel_instance(layers: &[Superoperator], generators: &[ComplexMatrix]) -> Result<ChannelBoundResult> {
    instance_bound(layers, generators, false)
}

/// Instance bound for unitary layers, where `‖Ā‖ = 1` tightens the
/// prefactor `2ⁿ` to `2^{n/2}`. This is the form the worst-case bound relaxes.
pub fn bound_channel_instance_unitary(
    layers: &[Superoperator],
    generators: &[ComplexMatrix],
) -> Result<ChannelBoundResult> {
    if !layers.iter().all(|l| matcore::is_unitary(&l.matrix)) {
        return Err(Error::Validation(
            "the tightened instance bound needs unitary circuit layers".into(),
        ));
    }
    instance_bound(layers, generators, true)
}

fn instance_bound(layers: &[Superoperator], generators: &[ComplexMatrix], unitary: bool) -> Result<ChannelBoundResult> {
    let inter = channel_interaction_generators(layers, generators)?;
    let size = inter.average.nrows();
    let mut suffix = matcore::zeros(size, size);
    let mut comm_sum = 0.0;
    for g in inter.layers.iter().rev() {
        comm_sum += spectral_norm(&commutator(g, &suffix));
        suffix += g;
    }
    let n_layers = inter.layers.len();
    let dim = layers[0].dim as f64;
    let g_norm = spectral_norm(&inter.average);
    let prefactor = if unitary { dim.sqrt() } else { dim };
    let value = 1.0 - prefactor * (0.5 * comm_sum + dim.sqrt() * n_layers as f64 * g_norm);
    Ok(ChannelBoundResult {
        value,
        kind: ChannelBoundKind::Instance,
        terms: ChannelBoundTerms {
            n_qubits: dim.log2().round() as usize,
            layers: n_layers,
            commutator_sum: Some(0.5 * comm_sum),
            g_norm: Some(g_norm),
            ..Default::default()
        },
    })
}

/// `1 − 2^{n/2} δ N ((N−1)δ/2 + 2^{n/2} γ)`, valid when every layer is
/// unitary, `‖M_j‖ ≤ δ` and `‖calG‖ ≤ γδ`.
pub fn bound_channel_worst(
    n_qubits: usize,
    layers: usize,
    delta: f64,
    gamma: f64,
    unitary: bool,
) -> Result<ChannelBoundResult> {
    if !unitary {
        return Err(Error::Validation(
            "the worst-case channel bound needs unitary circuit layers".into(),
        ));
    }
    if layers == 0 || delta.is_nan() || delta < 0.0 || gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Validation(format!(
            "need N ≥ 1, δ ≥ 0, γ ≥ 0 (got N={layers}, δ={delta}, γ={gamma})"
        )));
    }
    let root = 2f64.powf(n_qubits as f64 / 2.0);
    let nf = layers as f64;
    let value = 1.0 - root * delta * nf * ((nf - 1.0) / 2.0 * delta + root * gamma);
    Ok(ChannelBoundResult {
        value,
        kind: ChannelBoundKind::WorstCase,
        terms: ChannelBoundTerms {
            n_qubits,
            layers,
            delta: Some(delta),
            gamma: Some(gamma),
            ..Default::default()
        },
    })
}

/// Error generators `M_j(θ) = Σ_k θ_{j,k} B_{j,k}` with `‖B_{j,k}‖ ≤ 1`
/// and `|θ_{j,k}| ≤ δ/ℓ_j`, so `‖M_j‖ ≤ δ`.
#[derive(Debug, Clone)]
pub struct ChannelErrorModel {
    n: usize,
    layers: Vec<Vec<ComplexMatrix>>,
    delta: f64,
    correlation: Correlation,
}

impl ChannelErrorModel {
    /// Bases are rescaled to unit spectral norm; zero elements are rejected.
    pub fn new(n: usize, layers: Vec<Vec<ComplexMatrix>>, delta: f64) -> Result<Self> {
        let size = 1usize << (2 * n);
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Validation(format!("error level {delta} must be finite and ≥ 0")));
        }
        let mut normalized = Vec::with_capacity(layers.len());
        for (j, layer) in layers.into_iter().enumerate() {
            let mut out = Vec::with_capacity(layer.len());
            for b in layer {
                if b.nrows() != size || b.ncols() != size {
                    return Err(Error::Dimension(format!(
                        "generator basis of layer {j} is {}x{}, expected {size}x{size}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                let norm = spectral_norm(&b);
                if norm == 0.0 {
                    return Err(Error::Validation(format!("zero generator basis element on layer {j}")));
                }
                out.push(b * c(1.0 / norm, 0.0));
            }
            normalized.push(out);
        }
        Ok(Self {
            n,
            layers: normalized,
            delta,
            correlation: Correlation::Independent,
        })
    }

    /// Uncertain dephasing rate on every qubit of every layer: basis
    /// `lindblad_generator(0, [Z_q])`, normalized.
    pub fn dephasing(n: usize, n_layers: usize, delta: f64) -> Result<Self> {
        let dim = 1usize << n;
        let basis = (0..n)
            .map(|q| {
                let z = crate::circuit::embed_operator(&matcore::pauli_z(), &[q], n)?;
                let ch = LindbladChannel::new(matcore::zeros(dim, dim), vec![z])?;
                Ok(lindblad_generator(&ch))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, vec![basis; n_layers], delta)
    }

    pub fn with_correlation(mut self, correlation: Correlation) -> Self {
        self.correlation = correlation;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn layers(&self) -> &[Vec<ComplexMatrix>] {
        &self.layers
    }

    /// Half-widths `δ/ℓ_j` per parameter.
    pub fn half_widths(&self) -> Vec<f64> {
        match self.correlation {
            Correlation::Independent => self
                .layers
                .iter()
                .flat_map(|l| std::iter::repeat_n(self.delta / l.len() as f64, l.len()))
                .collect(),
            Correlation::Systematic => {
                let l = self.layers.iter().map(Vec::len).max().unwrap_or(0);
                vec![self.delta / l as f64; l]
            }
        }
    }

    /// `M_j(θ)` for a flat parameter vector.
    pub fn generators(&self, theta: &[f64]) -> Result<Vec<ComplexMatrix>> {
        let expected = self.half_widths().len();
        if theta.len() != expected {
            return Err(Error::Dimension(format!(
                "theta has {} entries, model needs {expected}",
                theta.len()
            )));
        }
        let size = 1usize << (2 * self.n);
        let mut offset = 0;
        Ok(self
            .layers
            .iter()
            .map(|layer| {
                let block = match self.correlation {
                    Correlation::Independent => {
                        let b = &theta[offset..offset + layer.len()];
                        offset += layer.len();
                        b
                    }
                    Correlation::Systematic => &theta[..layer.len()],
                };
                layer
                    .iter()
                    .zip(block)
                    .fold(matcore::zeros(size, size), |acc, (b, &t)| acc + b * c(t, 0.0))
            })
            .collect())
    }

    /// Linear map `θ ↦ calG_j(θ)` for the given circuit layers.
    pub fn family(&self, circuit_layers: &[Superoperator]) -> Result<InteractionFamily> {
        if circuit_layers.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "{} circuit layer(s) but {} error layer(s)",
                circuit_layers.len(),
                self.layers.len()
            )));
        }
        let frames = prefix_frames(circuit_layers)?;
        let terms = frames
            .iter()
            .zip(&self.layers)
            .map(|((v, v_inv), basis)| basis.iter().map(|b| v_inv * b * v).collect())
            .collect();
        InteractionFamily::new(1usize << (2 * self.n), terms, self.correlation, false)
    }
}

/// γ for the channel model by one of the coherent backends.
pub fn channel_gamma(
    circuit_layers: &[Superoperator],
    model: &ChannelErrorModel,
    method: GammaMethod,
    settings: &OptSettings,
) -> Result<GammaResult> {
    let family = model.family(circuit_layers)?;
    match method {
        GammaMethod::Opt => cohbound::gamma_opt_family(&family, settings),
        GammaMethod::Vertex => cohbound::gamma_vertex_family(&family, cohbound::VERTEX_CAP),
        GammaMethod::Norm => cohbound::gamma_norm_family(&family),
        GammaMethod::Partition => Err(Error::Validation(
            "partitioned γ is only available for coherent models".into(),
        )),
    }
}

/// `tr(√(√ρ σ √ρ))²`.
pub fn state_fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let s = psd_sqrt(rho);
    let inner = &s * sigma * &s;
    let (vals, _) = hermitian_eigen(&inner);
    let t: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    (t * t).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FminSettings {
    pub samples: usize,
    /// Best samples refined by local search.
    pub polish: usize,
    pub seed: u64,
}

impl Default for FminSettings {
    fn default() -> Self {
        Self {
            samples: 2000,
            polish: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FminEstimate {
    pub value: f64,
    pub state: ComplexVector,
}

fn output_state(channel: &Superoperator, psi: &ComplexVector) -> Result<ComplexMatrix> {
    let rho = psi * psi.adjoint();
    let out = channel.apply(&rho)?;
    Ok((&out + out.adjoint()) * c(0.5, 0.0))
}

fn check_physical(state: &ComplexMatrix) -> Result<()> {
    let (vals, _) = hermitian_eigen(state);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return Err(Error::NonPhysical(format!("output state has eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn pure_fidelity(ideal: &Superoperator, noisy: &Superoperator, psi: &ComplexVector) -> Result<f64> {
    let a = output_state(ideal, psi)?;
    let b = output_state(noisy, psi)?;
    check_physical(&b)?;
    Ok(state_fidelity(&a, &b))
}

fn params_to_state(x: &[f64]) -> Option<ComplexVector> {
    let d = x.len() / 2;
    let v = ComplexVector::from_fn(d, |i, _| c(x[i], x[d + i]));
    let norm = v.norm();
    (norm > 1e-12).then(|| v / c(norm, 0.0))
}

/// Estimates `min_ρ F(Φ̄(ρ), Φ(ρ))` over pure inputs: Haar-random samples,
/// then local refinement of the best few. The estimate is an upper bound on
/// the true minimum.
pub fn estimate_fmin(ideal: &Superoperator, noisy: &Superoperator, settings: &FminSettings) -> Result<FminEstimate> {
    if ideal.dim != noisy.dim {
        return Err(Error::Dimension("channels act on different spaces".into()));
    }
    if settings.samples == 0 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    let d = ideal.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let states: Vec<ComplexVector> = (0..settings.samples)
        .map(|_| {
            let v = ComplexVector::from_fn(d, |_, _| {
                c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            let norm = v.norm();
            v / c(norm, 0.0)
        })
        .collect();
    let values = states
        .par_iter()
        .map(|psi| pure_fidelity(ideal, noisy, psi))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut best = FminEstimate {
        value: values[order[0]],
        state: states[order[0]].clone(),
    };
    if settings.polish == 0 {
        return Ok(best);
    }

    let objective = |x: &[f64]| match params_to_state(x) {
        Some(psi) => pure_fidelity(ideal, noisy, &psi).map_or(f64::NAN, |f| -f),
        None => f64::NAN,
    };
    let initial: Vec<Vec<f64>> = order
        .iter()
        .take(settings.polish)
        .map(|&i| {
            let psi = &states[i];
            psi.iter().map(|z| z.re).chain(psi.iter().map(|z| z.im)).collect()
        })
        .collect();
    let opt = OptSettings {
        starts: 1,
        max_iters: 100,
        seed: settings.seed,
        ..OptSettings::default()
    };
    let out = optkit::maximize_box_from(&objective, &vec![-1.0; 2 * d], &vec![1.0; 2 * d], &opt, &initial)?;
    if -out.value < best.value {
        if let Some(state) = params_to_state(&out.x) {
            best = FminEstimate {
                value: -out.value,
                state,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gen_exp, pauli_x, pauli_y, pauli_z, trace};
    use rand::Rng;
    use std::f64::consts::PI;

    fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let rho = &a * a.adjoint();
        let t = trace(&rho);
        rho / t
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        spectral_norm(&(a - b)) <= tol
    }

    fn depolarizing(p: f64) -> Vec<ComplexMatrix> {
        vec![
            matcore::identity(2) * c((1.0 - 3.0 * p / 4.0).sqrt(), 0.0),
            pauli_x() * c((p / 4.0).sqrt(), 0.0),
            pauli_y() * c((p / 4.0).sqrt(), 0.0),
            pauli_z() * c((p / 4.0).sqrt(), 0.0),
        ]
    }

    #[test]
    fn kraus_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = kraus_to_superop(&[matcore::identity(2)]).unwrap();
        assert!(close(id.matrix(), &matcore::identity(4), 0.0));

        let u = matcore::herm_exp(&(pauli_y() * c(0.4, 0.0) + pauli_z() * c(0.2, 0.0))).unwrap();
        let su = kraus_to_superop(std::slice::from_ref(&u)).unwrap();
        let dep = kraus_to_superop(&depolarizing(0.3)).unwrap();
        for _ in 0..20 {
            let rho = random_density(2, &mut rng);
            assert!(close(&su.apply(&rho).unwrap(), &(&u * &rho * u.adjoint()), 1e-13));
            let expected = &rho * c(0.7, 0.0) + matcore::identity(2) * c(0.15, 0.0);
            assert!(close(&dep.apply(&rho).unwrap(), &expected, 1e-12));
        }
        assert!(dep.trace_preservation_error() < 1e-12);
        assert!(kraus_completeness_error(&depolarizing(0.3)) < 1e-12);
        assert!(kraus_to_superop(&[matcore::identity(2), matcore::identity(4)]).is_err());
    }

    #[test]
    fn lindblad_generator_cases() {
        let zero = LindbladChannel::new(matcore::zeros(2, 2), vec![]).unwrap();
        let m = lindblad_generator(&zero);
        assert_eq!(spectral_norm(&m), 0.0);
        assert!(close(&gen_exp(&m).unwrap(), &matcore::identity(4), 0.0));

        let k = pauli_z() * c(PI / 4.0, 0.0);
        let coherent = LindbladChannel::new(k.clone(), vec![]).unwrap();
        let u = matcore::herm_exp(&k).unwrap();
        let expected = Superoperator::from_unitary(&u).unwrap();
        assert!(close(
            &gen_exp(&lindblad_generator(&coherent)).unwrap(),
            expected.matrix(),
            1e-10
        ));

        let sm = matcore::from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap() * c(0.3, 0.0);
        let damped = LindbladChannel::new(pauli_x() * c(0.2, 0.0), vec![sm]).unwrap();
        let s = Superoperator::from_matrix(gen_exp(&lindblad_generator(&damped)).unwrap()).unwrap();
        assert!(s.trace_preservation_error() < 1e-9);
        assert!(LindbladChannel::new(pauli_x() * c(0.0, 1.0), vec![]).is_err());
    }

    #[test]
    fn interaction_generators() {
        let circuit = Circuit::from_gates(
            1,
            vec![
                crate::circuit::Gate::named("h", &[], &[0]).unwrap(),
                crate::circuit::Gate::named("rx", &[0.3], &[0]).unwrap(),
            ],
        )
        .unwrap();
        let layers = circuit_superoperators(&circuit).unwrap();
        let zero = vec![matcore::zeros(4, 4); 2];
        assert_eq!(
            spectral_norm(&channel_interaction_generators(&layers, &zero).unwrap().average),
            0.0
        );

        let model = ChannelErrorModel::dephasing(1, 2, 0.1).unwrap();
        let ms = model.generators(&[0.05, -0.02]).unwrap();
        let inter = channel_interaction_generators(&layers, &ms).unwrap();
        for (g, m) in inter.layers.iter().zip(&ms) {
            assert!((spectral_norm(g) - spectral_norm(m)).abs() < 1e-9);
        }
        assert!(close(&inter.layers[0], &ms[0], 0.0));

        let singular = Superoperator::from_matrix(matcore::zeros(4, 4)).unwrap();
        let err = channel_interaction_generators(&[singular, layers[0].clone()], &zero).unwrap_err();
        assert!(matches!(err, Error::Singular { layer: 0, .. }));
    }

    #[test]
    fn noisy_channel_matches_coherent_circuit() {
        let circuit = Circuit::from_gates(
            1,
            vec![
                crate::Gate::named("h", &[], &[0]).unwrap(),
                crate::Gate::named("rz", &[0.7], &[0]).unwrap(),
            ],
        )
        .unwrap();
        let hs = [pauli_x() * c(0.03, 0.0), pauli_y() * c(-0.02, 0.0)];
        let gens: Vec<ComplexMatrix> = hs
            .iter()
            .map(|h| lindblad_generator(&LindbladChannel::new(h.clone(), vec![]).unwrap()))
            .collect();
        let layers = circuit_superoperators(&circuit).unwrap();
        let noisy = noisy_channel(&layers, &gens).unwrap();
        let mut u = matcore::identity(2);
        for (g, h) in circuit.layer_unitaries().iter().zip(&hs) {
            u = g * matcore::herm_exp(h).unwrap() * u;
        }
        assert!(close(
            noisy.matrix(),
            Superoperator::from_unitary(&u).unwrap().matrix(),
            1e-12
        ));
        let ideal = compose(&layers).unwrap();
        assert!(close(
            ideal.matrix(),
            Superoperator::from_unitary(circuit.unitary()).unwrap().matrix(),
            1e-12
        ));
    }

    #[test]
    fn channel_bound_formulas() {
        assert_eq!(bound_channel_worst(2, 5, 0.0, 1.0, true).unwrap().value, 1.0);
        let b = bound_channel_worst(1, 1, 0.01, 1.0, true).unwrap().value;
        assert!((b - (1.0 - 0.02)).abs() < 1e-15);
        assert!(bound_channel_worst(1, 1, 0.01, 1.0, false).is_err());
        let layers = vec![Superoperator::identity(2)];
        let inst = bound_channel_instance(&layers, &[matcore::zeros(4, 4)]).unwrap();
        assert_eq!(inst.value, 1.0);
    }

    #[test]
    fn fmin_examples() {
        let settings = FminSettings {
            samples: 300,
            polish: 2,
            seed: 5,
        };
        let u = Superoperator::from_unitary(&matcore::herm_exp(&(pauli_x() * c(0.3, 0.0))).unwrap()).unwrap();
        let same = estimate_fmin(&u, &u, &settings).unwrap();
        assert!((same.value - 1.0).abs() < 1e-10);

        let p = 0.2;
        let dep = kraus_to_superop(&depolarizing(p)).unwrap();
        let est = estimate_fmin(&Superoperator::identity(2), &dep, &settings).unwrap();
        // Every pure state gives 1 − p/2 exactly.
        assert!((est.value - (1.0 - p / 2.0)).abs() < 1e-9, "{}", est.value);
        assert_eq!(
            est,
            estimate_fmin(&Superoperator::identity(2), &dep, &settings).unwrap()
        );

        let bad = Superoperator::from_matrix(matcore::identity(4) * c(-1.0, 0.0)).unwrap();
        assert!(matches!(
            estimate_fmin(&Superoperator::identity(2), &bad, &settings),
            Err(Error::NonPhysical(_))
        ));
    }
}
