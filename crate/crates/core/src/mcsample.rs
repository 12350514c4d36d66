//! Monte Carlo fidelity statistics under sampled admissible errors, and
//! δ sweeps that put them next to the certified bounds.
//!
//! Samples come in chunks of [`CHUNK`]; chunk `c` draws from ChaCha8 seeded
//! with `seed` on stream `c`. Sample `k` is therefore the same for every
//! sample count and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::cohbound::{self, GammaResult};
use crate::errmodel::{BoundNorm, CoherentErrorModel, ModelKind, ThetaAssignment};
use crate::error::{Error, Result};
use crate::matcore::{self, c, hermitian_eigen, trace, ComplexMatrix};
use crate::optkit::OptSettings;

pub const CHUNK: usize = 1024;

/// Column names of the sweep table.
pub const SWEEP_HEADER: [&str; 10] = [
    "delta",
    "bound_direct",
    "bound_gamma_opt",
    "bound_gamma_norm",
    "bound_gamma_vertex",
    "bound_prior",
    "mc_worst",
    "mc_mean",
    "n_samples",
    "seed",
];

pub const SCALING_HEADER: [&str; 3] = ["delta_n", "gamma", "infidelity_bound"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub worst: f64,
    pub mean: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub histogram: Histogram,
    pub argmin_theta: ThetaAssignment,
}

/// `e^{-iH_{e,j}}` for one layer; single-element bases reuse one
/// eigendecomposition for every θ.
enum LayerError {
    None,
    Single { values: Vec<f64>, vectors: ComplexMatrix },
    General(Vec<ComplexMatrix>),
}

impl LayerError {
    fn new(basis: &[ComplexMatrix]) -> Self {
        match basis {
            [] => Self::None,
            [b] => {
                let (values, vectors) = hermitian_eigen(b);
                Self::Single { values, vectors }
            }
            many => Self::General(many.to_vec()),
        }
    }

    fn unitary(&self, block: &[f64], dim: usize) -> Result<Option<ComplexMatrix>> {
        match self {
            Self::None => Ok(None),
            Self::Single { values, vectors } => {
                let mut scaled = vectors.clone();
                for (j, &v) in values.iter().enumerate() {
                    let phase = num_complex::Complex64::from_polar(1.0, -block[0] * v);
                    for z in scaled.column_mut(j).iter_mut() {
                        *z *= phase;
                    }
                }
                Ok(Some(scaled * vectors.adjoint()))
            }
            Self::General(basis) => {
                let h = basis
                    .iter()
                    .zip(block)
                    .fold(matcore::zeros(dim, dim), |acc, (b, &t)| acc + b * c(t, 0.0));
                Ok(Some(matcore::herm_exp(&h)?))
            }
        }
    }
}

/// Fast noisy-circuit evaluator for repeated sampling.
struct NoisyEvaluator<'a> {
    circuit: &'a Circuit,
    model: &'a CoherentErrorModel,
    layers: Vec<LayerError>,
}

impl<'a> NoisyEvaluator<'a> {
    fn new(circuit: &'a Circuit, model: &'a CoherentErrorModel) -> Result<Self> {
        if circuit.len() != model.n_layers() || circuit.n_qubits() != model.n_qubits() {
            return Err(Error::Dimension(format!(
                "model covers {} layer(s) on {} qubit(s), circuit has {} on {}",
                model.n_layers(),
                model.n_qubits(),
                circuit.len(),
                circuit.n_qubits()
            )));
        }
        Ok(Self {
            circuit,
            model,
            layers: model.layers().iter().map(|b| LayerError::new(b)).collect(),
        })
    }

    fn fidelity(&self, theta: &[f64]) -> Result<f64> {
        let dim = self.circuit.dim();
        let blocks = self.model.layer_blocks(theta)?;
        let mut acc = matcore::identity(dim);
        for ((u, layer), block) in self.circuit.layer_unitaries().iter().zip(&self.layers).zip(blocks) {
            if let Some(e) = layer.unitary(block, dim)? {
                acc = e * acc;
            }
            acc = u * acc;
        }
        let overlap = trace(&(self.circuit.unitary().adjoint() * acc)) / dim as f64;
        Ok(overlap.norm_sqr().min(1.0))
    }
}

/// Uniform draw from the admissible set: the box for infinity-norm models,
/// per-layer Euclidean balls otherwise.
fn draw(model: &CoherentErrorModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match model.bound_norm() {
        BoundNorm::Infinity => model
            .half_widths()
            .iter()
            .map(|&w| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 })
            .collect(),
        BoundNorm::Two => {
            let delta = model.delta();
            let mut out = Vec::with_capacity(model.n_params());
            let blocks: Vec<usize> = match model.correlation() {
                crate::errmodel::Correlation::Independent => model.ells(),
                crate::errmodel::Correlation::Systematic => vec![model.n_params()],
            };
            for l in blocks {
                let g: Vec<f64> = (0..l).map(|_| StandardNormal.sample(rng)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = delta * rng.random::<f64>().powf(1.0 / l.max(1) as f64);
                out.extend(g.iter().map(|v| if norm > 0.0 { v / norm * radius } else { 0.0 }));
            }
            out
        }
    }
}

fn histogram(values: &[f64], worst: f64, bins: usize) -> Histogram {
    let lo = worst.min(1.0);
    let width = (1.0 - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            bins - 1
        };
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// Fidelity of `num_samples` uniformly drawn admissible error instances.
pub fn sample_fidelity(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    num_samples: usize,
    seed: u64,
) -> Result<SampleStats> {
    if num_samples == 0 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    let eval = NoisyEvaluator::new(circuit, model)?;
    let chunks = num_samples.div_ceil(CHUNK);
    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(num_samples - chunk * CHUNK);
            let mut values = Vec::with_capacity(count);
            let mut worst: Option<(f64, Vec<f64>)> = None;
            for _ in 0..count {
                let theta = draw(model, &mut rng);
                let f = eval.fidelity(&theta)?;
                if worst.as_ref().is_none_or(|(w, _)| f < *w) {
                    worst = Some((f, theta));
                }
                values.push(f);
            }
            Ok((values, worst.expect("chunks are non-empty")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut all = Vec::with_capacity(num_samples);
    let mut worst: Option<(f64, Vec<f64>)> = None;
    for (values, (w, theta)) in per_chunk {
        all.extend(values);
        if worst.as_ref().is_none_or(|(b, _)| w < *b) {
            worst = Some((w, theta));
        }
    }
    let (worst, theta) = worst.expect("at least one chunk");
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    Ok(SampleStats {
        worst,
        mean,
        n_samples: num_samples,
        seed,
        histogram: histogram(&all, worst, 20),
        argmin_theta: ThetaAssignment::new(theta),
    })
}

/// Which columns a sweep fills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Error levels in the model's raw coordinates (over-rotation for
    /// control errors).
    pub deltas: Vec<f64>,
    pub direct: bool,
    pub gamma_opt: bool,
    pub gamma_norm: bool,
    pub gamma_vertex: bool,
    pub prior: bool,
    pub samples: usize,
    pub seed: u64,
    pub opt: OptSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas: Vec::new(),
            direct: true,
            gamma_opt: true,
            gamma_norm: true,
            gamma_vertex: true,
            prior: true,
            samples: 10_000,
            seed: 0,
            opt: OptSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub bound_direct: Option<f64>,
    pub bound_gamma_opt: Option<f64>,
    pub bound_gamma_norm: Option<f64>,
    pub bound_gamma_vertex: Option<f64>,
    pub bound_prior: Option<f64>,
    pub mc_worst: Option<f64>,
    pub mc_mean: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Why a requested cell is empty.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// γ values used for the γ-bound columns; they do not depend on δ.
    pub gammas: Vec<GammaResult>,
}

fn cell<T>(r: Result<T>, what: &str, notes: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Bounds and sampled statistics on a grid of error levels.
pub fn sweep(circuit: &Circuit, template: &CoherentErrorModel, config: &SweepConfig) -> Result<SweepTable> {
    let n = circuit.len();
    let mut gamma_notes = Vec::new();
    let gamma = |enabled: bool, f: &dyn Fn() -> Result<GammaResult>, name: &str, notes: &mut Vec<String>| {
        if enabled {
            cell(f(), name, notes)
        } else {
            None
        }
    };
    let g_opt = gamma(
        config.gamma_opt,
        &|| cohbound::gamma_opt(circuit, template, &config.opt),
        "gamma_opt",
        &mut gamma_notes,
    );
    let g_norm = gamma(
        config.gamma_norm,
        &|| cohbound::gamma_norm(circuit, template),
        "gamma_norm",
        &mut gamma_notes,
    );
    let g_vertex = gamma(
        config.gamma_vertex,
        &|| cohbound::gamma_vertex(circuit, template),
        "gamma_vertex",
        &mut gamma_notes,
    );
    let prior_available = matches!(template.kind(), ModelKind::ControlError);

    let mut rows = Vec::with_capacity(config.deltas.len());
    for &raw in &config.deltas {
        let mut notes = gamma_notes.clone();
        let model = template.clone().with_delta(template.to_normalized(raw))?;
        let delta = model.delta();
        let via_gamma = |g: &Option<GammaResult>| {
            g.as_ref()
                .and_then(|g| cohbound::bound_gamma(delta, n, g.value).ok())
                .map(|b| b.value)
        };
        let bound_direct = if config.direct {
            cell(
                cohbound::bound_direct(circuit, &model, &config.opt),
                "bound_direct",
                &mut notes,
            )
            .map(|b| b.value)
        } else {
            None
        };
        let bound_prior = if config.prior && prior_available {
            cell(cohbound::bound_prior(circuit, raw), "bound_prior", &mut notes).map(|b| b.value)
        } else {
            if config.prior {
                notes.push("bound_prior: only defined for control-error models".into());
            }
            None
        };
        let stats = if config.samples > 0 {
            cell(
                sample_fidelity(circuit, &model, config.samples, config.seed),
                "sampling",
                &mut notes,
            )
        } else {
            None
        };
        rows.push(SweepRow {
            delta: raw,
            bound_direct,
            bound_gamma_opt: via_gamma(&g_opt),
            bound_gamma_norm: via_gamma(&g_norm),
            bound_gamma_vertex: via_gamma(&g_vertex),
            bound_prior,
            mc_worst: stats.as_ref().map(|s| s.worst),
            mc_mean: stats.as_ref().map(|s| s.mean),
            n_samples: if stats.is_some() { config.samples } else { 0 },
            seed: config.seed,
            notes,
        });
    }
    Ok(SweepTable {
        rows,
        gammas: [g_opt, g_norm, g_vertex].into_iter().flatten().collect(),
    })
}

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e16)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_float)
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("CSV output failed: {e}"))
}

/// Sweep table as CSV; empty cells are `NA`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            format_float(r.delta),
            fmt_cell(r.bound_direct),
            fmt_cell(r.bound_gamma_opt),
            fmt_cell(r.bound_gamma_norm),
            fmt_cell(r.bound_gamma_vertex),
            fmt_cell(r.bound_prior),
            fmt_cell(r.mc_worst),
            fmt_cell(r.mc_mean),
            r.n_samples.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

/// Infidelity bound `(δN)²(δN/2 + γ)²` as a function of the noise/depth
/// factor δN.
pub fn scaling_infidelity(delta_n: f64, gamma: f64) -> f64 {
    (delta_n * (delta_n / 2.0 + gamma)).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub delta_n: f64,
    pub gamma: f64,
    pub infidelity_bound: f64,
}

pub fn scaling_curve(delta_n: &[f64], gammas: &[f64]) -> Vec<ScalingPoint> {
    gammas
        .iter()
        .flat_map(|&gamma| {
            delta_n.iter().map(move |&x| ScalingPoint {
                delta_n: x,
                gamma,
                infidelity_bound: scaling_infidelity(x, gamma),
            })
        })
        .collect()
}

pub fn scaling_csv(points: &[ScalingPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCALING_HEADER).map_err(csv_error)?;
    for p in points {
        w.write_record([
            format_float(p.delta_n),
            format_float(p.gamma),
            format_float(p.infidelity_bound),
        ])
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(Error::Validation(format!(
            "invalid log grid [{lo}, {hi}] with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}
