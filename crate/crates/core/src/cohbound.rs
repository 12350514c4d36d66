//! Worst-case fidelity bounds for circuits under coherent errors.
//!
//! With interaction Hamiltonians `G_j` and their average `G`, the fidelity
//! obeys `F ≥ 1 − (½ Σ_j ‖Σ_{k>j} [G_j, G_k]‖ + N‖G‖)²` (direct bound). If
//! every `‖H_{e,j}‖ ≤ δ` and `‖G‖ ≤ γδ`, this relaxes to
//! `F ≥ 1 − δ²N²((N−1)δ/2 + γ)²` (γ bound).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::errmodel::{BoundNorm, CoherentErrorModel, Correlation, InteractionFamily, ThetaAssignment};
use crate::error::{Error, Result};
use crate::matcore::{self, c, commutator, hermitian_norm, trace, ComplexMatrix};
use crate::optkit::{self, OptDiagnostics, OptSettings};

/// Default limit on sign variables for exact vertex enumeration.
pub const VERTEX_CAP: usize = 22;

/// Limit on sign variables for the exact direct bound; each vertex costs
/// `N` commutators, so the cap is tighter than for γ.
pub const DIRECT_VERTEX_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMethod {
    Opt,
    Vertex,
    Norm,
    Partition,
}

impl std::str::FromStr for GammaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt" => Ok(Self::Opt),
            "vertex" => Ok(Self::Vertex),
            "norm" => Ok(Self::Norm),
            "partition" => Ok(Self::Partition),
            other => Err(Error::Validation(format!(
                "unknown gamma method '{other}' (expected opt, vertex, norm or partition)"
            ))),
        }
    }
}

/// Robustness measure γ with `‖G(θ)‖ ≤ γδ` over the admissible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub value: f64,
    pub method: GammaMethod,
    /// Maximizer in unit-box coordinates (`|θ_{j,k}| ≤ 1/ℓ_j`).
    pub argmax_theta: Option<ThetaAssignment>,
    /// True when the value is exact or a proven upper bound.
    pub certified: bool,
    pub diagnostics: Option<OptDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Direct,
    Gamma,
    Prior,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundIngredients {
    pub delta: f64,
    pub layers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// `½ Σ_j ‖Σ_{k>j} [G_j, G_k]‖` at the maximizer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutator_sum: Option<f64>,
    /// `N‖G‖` at the maximizer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_g_norm: Option<f64>,
    /// `Σ_j ‖H̄_j‖`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_norm_sum: Option<f64>,
}

/// Lower bound on the worst-case fidelity. May be negative for large δN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityBound {
    pub value: f64,
    pub kind: BoundKind,
    pub ingredients: BoundIngredients,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaAssignment>,
    /// False when the inner maximization is only locally optimal.
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<OptDiagnostics>,
}

/// `|tr(Ū†U)/2^n|²`.
pub fn fidelity(ideal: &ComplexMatrix, noisy: &ComplexMatrix) -> Result<f64> {
    if ideal.shape() != noisy.shape() || ideal.nrows() != ideal.ncols() {
        return Err(Error::Dimension(format!(
            "fidelity of {}x{} and {}x{} matrices",
            ideal.nrows(),
            ideal.ncols(),
            noisy.nrows(),
            noisy.ncols()
        )));
    }
    let overlap = trace(&(ideal.adjoint() * noisy)) / ideal.nrows() as f64;
    Ok(overlap.norm_sqr().min(1.0))
}

fn require_infinity_norm(model: &CoherentErrorModel) -> Result<()> {
    if model.bound_norm() != BoundNorm::Infinity {
        return Err(Error::Validation(
            "this computation needs an infinity-norm error model".into(),
        ));
    }
    Ok(())
}

/// The two terms of the direct bound at a given θ: the commutator sum and `N‖G‖`.
pub fn direct_terms(family: &InteractionFamily, theta: &[f64]) -> Result<(f64, f64)> {
    let gs = family.layer_terms(theta)?;
    let dim = family.dim();
    let mut suffix = matcore::zeros(dim, dim);
    let mut comm_sum = 0.0;
    for g in gs.iter().rev() {
        // i[A, B] is Hermitian for Hermitian A, B.
        let comm = commutator(g, &suffix) * matcore::I;
        comm_sum += family.norm(&comm);
        suffix += g;
    }
    // N‖G‖ = ‖Σ_j G_j‖.
    Ok((0.5 * comm_sum, family.norm(&suffix)))
}

/// `(½ Σ_j ‖Σ_{k>j}[G_j, G_k]‖ + N‖G‖)²` at θ.
pub fn direct_objective(family: &InteractionFamily, theta: &[f64]) -> Result<f64> {
    let (comm, ng) = direct_terms(family, theta)?;
    Ok((comm + ng).powi(2))
}

/// Direct bound at one error instance.
pub fn bound_direct_at(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    theta: &ThetaAssignment,
) -> Result<FidelityBound> {
    let family = InteractionFamily::from_coherent(circuit, model)?;
    let (comm, ng) = direct_terms(&family, &theta.values)?;
    Ok(FidelityBound {
        value: 1.0 - (comm + ng).powi(2),
        kind: BoundKind::Direct,
        ingredients: BoundIngredients {
            delta: model.delta(),
            layers: circuit.len(),
            commutator_sum: Some(comm),
            scaled_g_norm: Some(ng),
            ..Default::default()
        },
        theta: Some(theta.clone()),
        certified: true,
        diagnostics: None,
    })
}

/// True when the direct objective is convex along each coordinate, so its
/// maximum over the box sits on a vertex.
fn direct_is_vertex_maximal(family: &InteractionFamily) -> bool {
    match family.correlation() {
        Correlation::Independent => true,
        Correlation::Systematic => family.n_params() <= 1,
    }
}

/// Worst-case direct bound: maximizes the direct objective over the
/// admissible box. Exact by vertex enumeration when the objective is
/// coordinate-wise convex and small enough, otherwise by multistart search.
pub fn bound_direct(circuit: &Circuit, model: &CoherentErrorModel, settings: &OptSettings) -> Result<FidelityBound> {
    require_infinity_norm(model)?;
    let family = InteractionFamily::from_coherent(circuit, model)?;
    if direct_is_vertex_maximal(&family) && family.n_params() <= DIRECT_VERTEX_CAP {
        bound_direct_vertex_family(&family, model.delta())
    } else {
        bound_direct_opt_family(&family, model.delta(), settings)
    }
}

/// Worst-case direct bound by multistart search only.
pub fn bound_direct_opt(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    settings: &OptSettings,
) -> Result<FidelityBound> {
    require_infinity_norm(model)?;
    let family = InteractionFamily::from_coherent(circuit, model)?;
    bound_direct_opt_family(&family, model.delta(), settings)
}

fn direct_result(
    family: &InteractionFamily,
    delta: f64,
    theta: Vec<f64>,
    certified: bool,
    diagnostics: Option<OptDiagnostics>,
) -> Result<FidelityBound> {
    let (comm, ng) = direct_terms(family, &theta)?;
    Ok(FidelityBound {
        value: 1.0 - (comm + ng).powi(2),
        kind: BoundKind::Direct,
        ingredients: BoundIngredients {
            delta,
            layers: family.n_layers(),
            commutator_sum: Some(comm),
            scaled_g_norm: Some(ng),
            ..Default::default()
        },
        theta: Some(ThetaAssignment::new(theta)),
        certified,
        diagnostics,
    })
}

pub fn bound_direct_opt_family(
    family: &InteractionFamily,
    delta: f64,
    settings: &OptSettings,
) -> Result<FidelityBound> {
    let upper: Vec<f64> = family.unit_half_widths().iter().map(|w| w * delta).collect();
    let lower: Vec<f64> = upper.iter().map(|w| -w).collect();
    let objective = |x: &[f64]| direct_objective(family, x).unwrap_or(f64::NAN);
    let out = optkit::maximize_box(&objective, &lower, &upper, settings)?;
    direct_result(family, delta, out.x, false, Some(out.diagnostics))
}

/// Exact worst-case direct bound by enumerating box vertices.
pub fn bound_direct_vertex_family(family: &InteractionFamily, delta: f64) -> Result<FidelityBound> {
    if !direct_is_vertex_maximal(family) {
        return Err(Error::Validation(
            "vertex enumeration of the direct bound needs independent errors or a single shared parameter".into(),
        ));
    }
    let p = family.n_params();
    if p > DIRECT_VERTEX_CAP {
        return Err(Error::Capacity {
            variables: p,
            cap: DIRECT_VERTEX_CAP,
        });
    }
    let widths: Vec<f64> = family.unit_half_widths().iter().map(|w| w * delta).collect();
    let vertex = |mask: u64| -> Vec<f64> {
        widths
            .iter()
            .enumerate()
            .map(|(i, &w)| if mask >> i & 1 == 1 { w } else { -w })
            .collect()
    };
    // The objective is even in θ; fix the last sign.
    let count: u64 = if p == 0 { 1 } else { 1 << (p - 1) };
    let high = if p == 0 { 0 } else { 1u64 << (p - 1) };
    let (best_mask, _) = (0..count)
        .into_par_iter()
        .map(|m| {
            let mask = m | high;
            (mask, direct_objective(family, &vertex(mask)).unwrap_or(f64::NAN))
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    direct_result(family, delta, vertex(best_mask), true, None)
}

fn check_gamma_family(family: &InteractionFamily) -> Result<()> {
    if family.n_layers() == 0 {
        return Err(Error::Validation("γ needs at least one layer".into()));
    }
    Ok(())
}

/// γ by multistart maximization of `‖G(θ)‖` over the unit box.
pub fn gamma_opt_family(family: &InteractionFamily, settings: &OptSettings) -> Result<GammaResult> {
    check_gamma_family(family)?;
    let directions = family.average_directions();
    let upper = family.unit_half_widths();
    let lower: Vec<f64> = upper.iter().map(|w| -w).collect();
    let dim = family.dim();
    let objective = |x: &[f64]| {
        let g = x
            .iter()
            .zip(&directions)
            .fold(matcore::zeros(dim, dim), |acc, (&t, d)| acc + d * c(t, 0.0));
        family.norm(&g)
    };
    let out = optkit::maximize_box(&objective, &lower, &upper, settings)?;
    Ok(GammaResult {
        value: out.value,
        method: GammaMethod::Opt,
        argmax_theta: Some(ThetaAssignment::new(out.x)),
        certified: false,
        diagnostics: Some(out.diagnostics),
    })
}

/// Exact γ by enumerating the unit-box vertices; `‖G‖` is convex in θ, so
/// its maximum is attained at a vertex. `G(−θ) = −G(θ)` halves the work.
pub fn gamma_vertex_family(family: &InteractionFamily, cap: usize) -> Result<GammaResult> {
    check_gamma_family(family)?;
    let p = family.n_params();
    if p > cap {
        return Err(Error::Capacity { variables: p, cap });
    }
    let widths = family.unit_half_widths();
    if p == 0 {
        return Ok(GammaResult {
            value: 0.0,
            method: GammaMethod::Vertex,
            argmax_theta: Some(ThetaAssignment::new(Vec::new())),
            certified: true,
            diagnostics: None,
        });
    }
    let scaled: Vec<ComplexMatrix> = family
        .average_directions()
        .into_iter()
        .zip(&widths)
        .map(|(d, &w)| d * c(w, 0.0))
        .collect();
    // Sign variables 0..p−1 are free; the last one stays +.
    let free = p - 1;
    let low_bits = free.min(12);
    let chunks: u64 = 1 << (free - low_bits);
    let sign = |mask: u64, i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
    let (best_mask, best) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let base = chunk << low_bits;
            let mut mask = base;
            let mut g = scaled[free].clone();
            for (i, d) in scaled.iter().enumerate().take(free) {
                g += d * c(sign(mask, i), 0.0);
            }
            let mut best = (mask, family.norm(&g));
            // Gray-code walk over the low bits: one rank-one update per vertex.
            for step in 1u64..(1 << low_bits) {
                let bit = step.trailing_zeros() as usize;
                let s = sign(mask, bit);
                g -= &scaled[bit] * c(2.0 * s, 0.0);
                mask ^= 1 << bit;
                let v = family.norm(&g);
                if v > best.1 {
                    best = (mask, v);
                }
            }
            best
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    let best_mask = best_mask | (1 << free);
    let theta = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| sign(best_mask, i) * w)
        .collect();
    Ok(GammaResult {
        value: best,
        method: GammaMethod::Vertex,
        argmax_theta: Some(ThetaAssignment::new(theta)),
        certified: true,
        diagnostics: None,
    })
}

/// Upper bound on γ from `‖G(θ)‖ ≤ ‖vec G(θ)‖₂ ≤ ‖M‖·‖θ‖₂`, where the
/// columns of `M` are `vec(D_p)` for `G(θ) = Σ_p θ_p D_p`. For a uniform
/// basis size ℓ this is `√(N/ℓ)·‖M‖` with `M = (1/N)[vec(V̄_j† B_{j,k} V̄_j)]`.
pub fn gamma_norm_family(family: &InteractionFamily) -> Result<GammaResult> {
    check_gamma_family(family)?;
    let directions = family.average_directions();
    let widths = family.unit_half_widths();
    if directions.is_empty() {
        return Ok(GammaResult {
            value: 0.0,
            method: GammaMethod::Norm,
            argmax_theta: None,
            certified: true,
            diagnostics: None,
        });
    }
    let d2 = family.dim() * family.dim();
    let m = ComplexMatrix::from_fn(d2, directions.len(), |r, col| directions[col].as_slice()[r]);
    let theta_norm = widths.iter().map(|w| w * w).sum::<f64>().sqrt();
    Ok(GammaResult {
        value: theta_norm * matcore::spectral_norm(&m),
        method: GammaMethod::Norm,
        argmax_theta: None,
        certified: true,
        diagnostics: None,
    })
}

pub fn gamma_opt(circuit: &Circuit, model: &CoherentErrorModel, settings: &OptSettings) -> Result<GammaResult> {
    require_infinity_norm(model)?;
    gamma_opt_family(&InteractionFamily::from_coherent(circuit, model)?, settings)
}

pub fn gamma_vertex(circuit: &Circuit, model: &CoherentErrorModel) -> Result<GammaResult> {
    gamma_vertex_capped(circuit, model, VERTEX_CAP)
}

pub fn gamma_vertex_capped(circuit: &Circuit, model: &CoherentErrorModel, cap: usize) -> Result<GammaResult> {
    require_infinity_norm(model)?;
    gamma_vertex_family(&InteractionFamily::from_coherent(circuit, model)?, cap)
}

pub fn gamma_norm(circuit: &Circuit, model: &CoherentErrorModel) -> Result<GammaResult> {
    require_infinity_norm(model)?;
    gamma_norm_family(&InteractionFamily::from_coherent(circuit, model)?)
}

fn check_scalars(delta: f64, n: usize, gamma: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) || n == 0 {
        return Err(Error::Validation(format!(
            "need δ ≥ 0, γ ≥ 0 and N ≥ 1 (got δ={delta}, γ={gamma}, N={n})"
        )));
    }
    Ok(())
}

/// `1 − δ²N²((N−1)δ/2 + γ)²`.
pub fn bound_gamma(delta: f64, n: usize, gamma: f64) -> Result<FidelityBound> {
    check_scalars(delta, n, gamma)?;
    let nf = n as f64;
    let inner = (nf - 1.0) / 2.0 * delta + gamma;
    Ok(FidelityBound {
        value: 1.0 - (delta * nf * inner).powi(2),
        kind: BoundKind::Gamma,
        ingredients: BoundIngredients {
            delta,
            layers: n,
            gamma: Some(gamma),
            ..Default::default()
        },
        theta: None,
        certified: true,
        diagnostics: None,
    })
}

/// `1 − (Σ_j ‖H̄_j‖)² δ²` for over-rotations `|θ_j| ≤ δ`.
pub fn bound_prior(circuit: &Circuit, overrotation: f64) -> Result<FidelityBound> {
    check_scalars(overrotation, circuit.len().max(1), 0.0)?;
    let sum: f64 = (0..circuit.len())
        .map(|j| circuit.layer_generator(j).map(|g| hermitian_norm(&g)))
        .sum::<Result<f64>>()?;
    Ok(FidelityBound {
        value: 1.0 - (sum * overrotation).powi(2),
        kind: BoundKind::Prior,
        ingredients: BoundIngredients {
            delta: overrotation,
            layers: circuit.len(),
            generator_norm_sum: Some(sum),
            ..Default::default()
        },
        theta: None,
        certified: true,
        diagnostics: None,
    })
}

/// Largest δ with `δ²N²(δN/2 + γ)² ≤ 1 − F`, i.e. the γ bound with `N − 1`
/// relaxed to `N`: `δN = √(γ² + 2√(1−F)) − γ`.
pub fn threshold_delta(target_fidelity: f64, n: usize, gamma: f64) -> Result<f64> {
    check_threshold(target_fidelity, n, gamma)?;
    let eps = 1.0 - target_fidelity;
    let x = (gamma * gamma + 2.0 * eps.sqrt()).sqrt() - gamma;
    Ok(x / n as f64)
}

/// Largest δ with `bound_gamma(δ, N, γ) ≥ F`, by bisection.
pub fn threshold_delta_exact(target_fidelity: f64, n: usize, gamma: f64) -> Result<f64> {
    check_threshold(target_fidelity, n, gamma)?;
    let value = |d: f64| bound_gamma(d, n, gamma).map(|b| b.value);
    let (mut lo, mut hi) = (0.0, threshold_delta(target_fidelity, n, gamma)?.max(1e-300));
    while value(hi)? >= target_fidelity {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if value(mid)? >= target_fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(lo)
}

fn check_threshold(target: f64, n: usize, gamma: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Validation(format!("target fidelity {target} outside (0, 1)")));
    }
    check_scalars(0.0, n, gamma)
}
