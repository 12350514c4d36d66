//! Robust circuit design: choose circuit parameters η that maximize a
//! robustness measure subject to bounds on others.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_jones_pulse, Circuit, Gate, PulseSequence};
use crate::cohbound::{self, GammaMethod, VERTEX_CAP};
use crate::errmodel::{model_cce, model_pauli, CoherentErrorModel, Correlation, Pauli};
use crate::error::{Error, Result};
use crate::matcore::{self, c, phase_distance, ComplexMatrix};
use crate::optkit::{self, OptDiagnostics, OptSettings};

/// Parameterized family `η ↦ Ū(η)`.
#[derive(Clone)]
pub enum Template {
    /// `η = (α_1, …, α_m, φ_1, …, φ_m)` for single-qubit pulses `α_φ`.
    Pulses { count: usize },
    /// Gate `j` is `e^{-iη_j H̄_j}` with a fixed local generator.
    Rotations { n: usize, gates: Vec<RotationGate> },
    /// No free parameters.
    Fixed(Circuit),
}

#[derive(Debug, Clone)]
pub struct RotationGate {
    pub label: String,
    pub support: Vec<usize>,
    pub generator: ComplexMatrix,
}

impl Template {
    pub fn n_params(&self) -> usize {
        match self {
            Self::Pulses { count } => 2 * count,
            Self::Rotations { gates, .. } => gates.len(),
            Self::Fixed(_) => 0,
        }
    }

    pub fn instantiate(&self, eta: &[f64]) -> Result<Circuit> {
        if eta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "template takes {} parameter(s), got {}",
                self.n_params(),
                eta.len()
            )));
        }
        match self {
            Self::Pulses { .. } => PulseSequence::from_params(eta)?.to_circuit(),
            Self::Rotations { n, gates } => {
                let layers = gates
                    .iter()
                    .zip(eta)
                    .map(|(g, &t)| {
                        let h = &g.generator * c(t, 0.0);
                        Gate::custom(&g.label, matcore::herm_exp(&h)?, &g.support, Some(h))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Circuit::from_gates(*n, layers)
            }
            Self::Fixed(circuit) => Ok(circuit.clone()),
        }
    }
}

/// Error model re-derived on every candidate circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Over-rotations `|θ_j| ≤ overrotation`.
    ControlError {
        overrotation: f64,
        correlation: Correlation,
    },
    Pauli {
        pauli: Pauli,
        delta: f64,
        correlation: Correlation,
    },
}

impl ModelSpec {
    pub fn build(&self, circuit: &Circuit) -> Result<CoherentErrorModel> {
        match *self {
            Self::ControlError {
                overrotation,
                correlation,
            } => model_cce(circuit, overrotation)?.with_correlation(correlation),
            Self::Pauli {
                pauli,
                delta,
                correlation,
            } => model_pauli(circuit, pauli, delta)?.with_correlation(correlation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRoute {
    /// Worst-case direct bound.
    Direct,
    /// γ bound with γ from the given method.
    Gamma(GammaMethod),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityTerm {
    pub model: ModelSpec,
    pub route: BoundRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedGamma {
    pub weight: f64,
    pub model: ModelSpec,
    pub method: GammaMethod,
}

/// User cost `f(η)`.
pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Objective {
    MaximizeBound(FidelityTerm),
    MinimizeGamma {
        model: ModelSpec,
        method: GammaMethod,
    },
    /// Minimize `f(η) + Σ_l λ_l γ_l(η)`.
    WeightedSum {
        cost: Option<CostFn>,
        terms: Vec<WeightedGamma>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Fidelity bound at least `threshold`.
    MinBound { term: FidelityTerm, threshold: f64 },
    /// Distance to the target unitary (modulo phase) at most the value.
    MaxTargetDistance(f64),
}

#[derive(Clone)]
pub struct DesignProblem {
    pub template: Template,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial: Vec<f64>,
    /// Unitary the design should keep implementing.
    pub target: Option<ComplexMatrix>,
}

impl DesignProblem {
    /// Composite `R_X(β)` pulses: maximize the worst-case bound under
    /// independent over-rotations `≤ delta` and keep the bound under
    /// systematic over-rotations at least `systematic_threshold`. The distance
    /// to `R_X(β)` is always reported and constrained when `max_distance` is
    /// given. Starts from the Jones sequence.
    pub fn composite_pulse(
        beta: f64,
        delta: f64,
        systematic_threshold: f64,
        max_distance: Option<f64>,
    ) -> Result<Self> {
        let initial = build_jones_pulse(beta)?;
        let count = initial.len();
        let two_pi = 2.0 * std::f64::consts::PI;
        let lower = [vec![0.0; count], vec![-two_pi; count]].concat();
        let upper = [vec![two_pi; count], vec![two_pi; count]].concat();
        let cce = |correlation| ModelSpec::ControlError {
            overrotation: delta,
            correlation,
        };
        Ok(Self {
            template: Template::Pulses { count },
            objective: Objective::MaximizeBound(FidelityTerm {
                model: cce(Correlation::Independent),
                route: BoundRoute::Direct,
            }),
            constraints: vec![Constraint::MinBound {
                term: FidelityTerm {
                    model: cce(Correlation::Systematic),
                    route: BoundRoute::Direct,
                },
                threshold: systematic_threshold,
            }]
            .into_iter()
            .chain(max_distance.map(Constraint::MaxTargetDistance))
            .collect(),
            lower,
            upper,
            initial: initial.to_params(),
            target: Some(Gate::named("rx", &[beta], &[0])?.unitary().clone()),
        })
    }

    fn validate(&self) -> Result<()> {
        let p = self.template.n_params();
        if self.lower.len() != p || self.upper.len() != p || self.initial.len() != p {
            return Err(Error::Dimension(format!(
                "template has {p} parameter(s); box and initial point must match"
            )));
        }
        for con in &self.constraints {
            match *con {
                Constraint::MinBound { threshold, .. } if !(threshold > 0.0 && threshold <= 1.0) => {
                    return Err(Error::Validation(format!(
                        "fidelity threshold {threshold} outside (0, 1]"
                    )));
                }
                Constraint::MaxTargetDistance(d) if d.is_nan() || d <= 0.0 => {
                    return Err(Error::Validation(format!("distance limit {d} must be positive")));
                }
                Constraint::MaxTargetDistance(_) if self.target.is_none() => {
                    return Err(Error::Validation("distance constraint needs a target unitary".into()));
                }
                _ => {}
            }
        }
        if let Objective::WeightedSum { terms, .. } = &self.objective {
            if terms.iter().any(|t| t.weight.is_nan() || t.weight < 0.0) {
                return Err(Error::Validation("weights must be non-negative".into()));
            }
        }
        Ok(())
    }
}

fn term_value(term: &FidelityTerm, circuit: &Circuit, settings: &OptSettings) -> Result<f64> {
    let model = term.model.build(circuit)?;
    match term.route {
        BoundRoute::Direct => Ok(cohbound::bound_direct(circuit, &model, settings)?.value),
        BoundRoute::Gamma(method) => {
            let gamma = gamma_value(&model, circuit, method, settings)?;
            Ok(cohbound::bound_gamma(model.delta(), circuit.len(), gamma)?.value)
        }
    }
}

fn gamma_value(
    model: &CoherentErrorModel,
    circuit: &Circuit,
    method: GammaMethod,
    settings: &OptSettings,
) -> Result<f64> {
    Ok(match method {
        GammaMethod::Opt => cohbound::gamma_opt(circuit, model, settings)?.value,
        GammaMethod::Vertex => cohbound::gamma_vertex(circuit, model)?.value,
        GammaMethod::Norm => cohbound::gamma_norm(circuit, model)?.value,
        GammaMethod::Partition => {
            let plan = crate::partition::PartitionPlan::auto(model, VERTEX_CAP)?;
            crate::partition::gamma_partitioned(circuit, model, &plan, VERTEX_CAP, settings)?.value
        }
    })
}

/// Infidelity on a log scale; keeps tiny infidelities well conditioned.
fn log_infidelity(bound: f64) -> f64 {
    (1.0 - bound).max(1e-300).log10()
}

struct Evaluator<'a> {
    problem: &'a DesignProblem,
    /// Settings for inner maximizations (cheap, fixed seed).
    inner: OptSettings,
}

impl Evaluator<'_> {
    /// Objective in natural units and its maximization form.
    fn objective(&self, eta: &[f64]) -> Result<(f64, f64)> {
        let circuit = self.problem.template.instantiate(eta)?;
        match &self.problem.objective {
            Objective::MaximizeBound(term) => {
                let b = term_value(term, &circuit, &self.inner)?;
                Ok((b, -log_infidelity(b)))
            }
            Objective::MinimizeGamma { model, method } => {
                let g = gamma_value(&model.build(&circuit)?, &circuit, *method, &self.inner)?;
                Ok((g, -g))
            }
            Objective::WeightedSum { cost, terms } => {
                let mut total = cost.as_ref().map_or(0.0, |f| f(eta));
                for t in terms {
                    if t.weight > 0.0 {
                        total += t.weight * gamma_value(&t.model.build(&circuit)?, &circuit, t.method, &self.inner)?;
                    }
                }
                Ok((total, -total))
            }
        }
    }

    /// `(value, scaled slack)` per constraint; slack ≥ 0 means satisfied.
    fn constraints(&self, eta: &[f64]) -> Result<Vec<(f64, f64)>> {
        let circuit = self.problem.template.instantiate(eta)?;
        self.problem
            .constraints
            .iter()
            .map(|con| match con {
                Constraint::MinBound { term, threshold } => {
                    let b = term_value(term, &circuit, &self.inner)?;
                    let slack = if *threshold >= 1.0 {
                        b - 1.0
                    } else {
                        log_infidelity(*threshold) - log_infidelity(b)
                    };
                    Ok((b, slack))
                }
                Constraint::MaxTargetDistance(limit) => {
                    let d = phase_distance(circuit.unitary(), self.problem.target.as_ref().expect("validated"));
                    Ok((d, 1.0 - d / limit))
                }
            })
            .collect()
    }

    fn min_slack(&self, eta: &[f64]) -> f64 {
        match self.constraints(eta) {
            Ok(v) => v.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min),
            Err(_) => f64::NAN,
        }
    }
}

/// Robustness measures of one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub eta: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<ConstraintReport>,
    /// Measures of every model appearing in the problem.
    pub models: Vec<ModelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub constraint: Constraint,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelSpec,
    pub direct_bound: f64,
    pub gamma: f64,
    pub gamma_method: GammaMethod,
    pub gamma_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub before: MeasureReport,
    pub after: MeasureReport,
    pub penalty: f64,
    pub diagnostics: Option<OptDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub eta: Vec<f64>,
    pub circuit: Circuit,
    /// Set for pulse templates.
    pub pulses: Option<PulseSequence>,
    pub report: DesignReport,
}

fn problem_models(problem: &DesignProblem) -> Vec<ModelSpec> {
    let mut out: Vec<ModelSpec> = Vec::new();
    let mut push = |m: ModelSpec| {
        if !out.contains(&m) {
            out.push(m);
        }
    };
    match &problem.objective {
        Objective::MaximizeBound(t) => push(t.model),
        Objective::MinimizeGamma { model, .. } => push(*model),
        Objective::WeightedSum { terms, .. } => terms.iter().for_each(|t| push(t.model)),
    }
    for con in &problem.constraints {
        if let Constraint::MinBound { term, .. } = con {
            push(term.model);
        }
    }
    out
}

fn measure(eval: &Evaluator<'_>, eta: &[f64], feasibility_tol: f64) -> Result<MeasureReport> {
    let circuit = eval.problem.template.instantiate(eta)?;
    let (objective, _) = eval.objective(eta)?;
    let constraints = eval
        .problem
        .constraints
        .iter()
        .zip(eval.constraints(eta)?)
        .map(|(con, (value, slack))| ConstraintReport {
            constraint: *con,
            value,
            satisfied: slack >= -feasibility_tol,
        })
        .collect();
    let models = problem_models(eval.problem)
        .into_iter()
        .map(|spec| {
            let model = spec.build(&circuit)?;
            let direct_bound = cohbound::bound_direct(&circuit, &model, &eval.inner)?.value;
            let (gamma, gamma_method) = match cohbound::gamma_vertex(&circuit, &model) {
                Ok(g) => (g.value, GammaMethod::Vertex),
                Err(Error::Capacity { .. }) => (
                    cohbound::gamma_opt(&circuit, &model, &eval.inner)?.value,
                    GammaMethod::Opt,
                ),
                Err(e) => return Err(e),
            };
            let gamma_bound = cohbound::bound_gamma(model.delta(), circuit.len(), gamma)?.value;
            Ok(ModelReport {
                model: spec,
                direct_bound,
                gamma,
                gamma_method,
                gamma_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureReport {
        eta: eta.to_vec(),
        objective,
        constraints,
        models,
        target_distance: eval
            .problem
            .target
            .as_ref()
            .map(|t| phase_distance(circuit.unitary(), t)),
    })
}

/// Solves a design problem. The initial point is always a candidate, so a
/// feasible initialization is never made worse.
pub fn design(problem: &DesignProblem, settings: &OptSettings) -> Result<DesignOutcome> {
    const FEASIBILITY_TOL: f64 = 1e-6;
    problem.validate()?;
    let eval = Evaluator {
        problem,
        inner: OptSettings {
            starts: 16,
            seed: settings.seed,
            parallel: false,
            ..OptSettings::default()
        },
    };
    let before = measure(&eval, &problem.initial, FEASIBILITY_TOL)?;

    let (eta, penalty, diagnostics) = if problem.template.n_params() == 0 {
        (problem.initial.clone(), 0.0, None)
    } else {
        let f = |x: &[f64]| eval.objective(x).map_or(f64::NAN, |(_, v)| v);
        let g = |x: &[f64]| {
            if problem.constraints.is_empty() {
                0.0
            } else {
                eval.min_slack(x)
            }
        };
        let out = optkit::maximize_constrained(
            &f,
            &g,
            &problem.lower,
            &problem.upper,
            settings,
            std::slice::from_ref(&problem.initial),
            FEASIBILITY_TOL,
        )?;
        (out.x, out.penalty, Some(out.diagnostics))
    };
    let after = measure(&eval, &eta, FEASIBILITY_TOL)?;
    let circuit = problem.template.instantiate(&eta)?;
    let pulses = match problem.template {
        Template::Pulses { .. } => Some(PulseSequence::from_params(&eta)?),
        _ => None,
    };
    Ok(DesignOutcome {
        eta,
        circuit,
        pulses,
        report: DesignReport {
            before,
            after,
            penalty,
            diagnostics,
        },
    })
}
