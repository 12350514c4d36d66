//! Upper bounds on γ by splitting the circuit into contiguous segments.
//!
//! `‖Σ_j G_j‖ ≤ Σ_s ‖Σ_{j∈s} G_j‖`, and conjugating a segment by the
//! (unitary) product of all earlier layers leaves its norm unchanged, so each
//! segment can be analysed as a circuit of its own.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::cohbound::{self, GammaMethod, GammaResult};
use crate::errmodel::{CoherentErrorModel, Correlation};
use crate::error::{Error, Result};
use crate::optkit::OptSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    /// Strictly increasing layer indices in `(0, N)` where a new segment starts.
    pub cut_points: Vec<usize>,
    /// Method per segment (`cut_points.len() + 1` entries).
    pub methods: Vec<GammaMethod>,
}

impl PartitionPlan {
    /// Same method on every segment.
    pub fn uniform(cut_points: Vec<usize>, method: GammaMethod) -> Self {
        let methods = vec![method; cut_points.len() + 1];
        Self { cut_points, methods }
    }

    /// Vertex enumeration everywhere, bisecting segments until each has at
    /// most `cap` sign variables.
    pub fn auto(model: &CoherentErrorModel, cap: usize) -> Result<Self> {
        let mut cuts = Vec::new();
        bisect(model, 0..model.n_layers(), cap, &mut cuts)?;
        cuts.sort_unstable();
        Ok(Self::uniform(cuts, GammaMethod::Vertex))
    }

    pub fn validate(&self, n_layers: usize) -> Result<()> {
        if self.methods.len() != self.cut_points.len() + 1 {
            return Err(Error::Validation(format!(
                "{} cut point(s) need {} segment method(s), got {}",
                self.cut_points.len(),
                self.cut_points.len() + 1,
                self.methods.len()
            )));
        }
        let mut prev = 0;
        for &cut in &self.cut_points {
            if cut <= prev || cut >= n_layers {
                return Err(Error::Validation(format!(
                    "cut points must be strictly increasing inside (0, {n_layers}), got {:?}",
                    self.cut_points
                )));
            }
            prev = cut;
        }
        if self.methods.contains(&GammaMethod::Partition) {
            return Err(Error::Validation(
                "segments cannot themselves use the partition method".into(),
            ));
        }
        Ok(())
    }

    fn segments(&self, n_layers: usize) -> Vec<std::ops::Range<usize>> {
        let bounds: Vec<usize> = std::iter::once(0)
            .chain(self.cut_points.iter().copied())
            .chain(std::iter::once(n_layers))
            .collect();
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }
}

/// Sign variables that vertex enumeration of a segment would need.
fn variables(model: &CoherentErrorModel, range: std::ops::Range<usize>) -> usize {
    let ells = &model.ells()[range];
    match model.correlation() {
        Correlation::Independent => ells.iter().sum(),
        Correlation::Systematic => ells.iter().copied().max().unwrap_or(0),
    }
}

fn bisect(model: &CoherentErrorModel, range: std::ops::Range<usize>, cap: usize, cuts: &mut Vec<usize>) -> Result<()> {
    if variables(model, range.clone()) <= cap {
        return Ok(());
    }
    if range.len() <= 1 {
        return Err(Error::Capacity {
            variables: variables(model, range),
            cap,
        });
    }
    let mid = range.start + range.len() / 2;
    cuts.push(mid);
    bisect(model, range.start..mid, cap, cuts)?;
    bisect(model, mid..range.end, cap, cuts)
}

/// Segment-local `max_θ ‖Σ_{j∈s} G_j‖` over the unit box.
fn segment_sum_norm(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    range: std::ops::Range<usize>,
    method: GammaMethod,
    cap: usize,
    settings: &OptSettings,
) -> Result<f64> {
    if method == GammaMethod::Vertex && variables(model, range.clone()) > cap {
        let mut cuts = Vec::new();
        bisect(model, range.clone(), cap, &mut cuts)?;
        cuts.sort_unstable();
        let bounds: Vec<usize> = std::iter::once(range.start)
            .chain(cuts)
            .chain(std::iter::once(range.end))
            .collect();
        return bounds
            .windows(2)
            .map(|w| segment_sum_norm(circuit, model, w[0]..w[1], method, cap, settings))
            .sum();
    }
    let len = range.len();
    let sub_circuit = circuit.slice(range.clone())?;
    let sub_model = model.slice(range)?;
    if sub_model.n_params() == 0 {
        return Ok(0.0);
    }
    let gamma = match method {
        GammaMethod::Opt => cohbound::gamma_opt(&sub_circuit, &sub_model, settings)?,
        GammaMethod::Vertex => cohbound::gamma_vertex_capped(&sub_circuit, &sub_model, cap)?,
        GammaMethod::Norm => cohbound::gamma_norm(&sub_circuit, &sub_model)?,
        GammaMethod::Partition => unreachable!("rejected by plan validation"),
    };
    Ok(gamma.value * len as f64)
}

/// `γ_part = (1/N) Σ_s max_θ ‖Σ_{j∈s} G_j^{(s)}‖`, an upper bound on γ.
pub fn gamma_partitioned(
    circuit: &Circuit,
    model: &CoherentErrorModel,
    plan: &PartitionPlan,
    cap: usize,
    settings: &OptSettings,
) -> Result<GammaResult> {
    let n = circuit.len();
    if n == 0 || model.n_layers() != n {
        return Err(Error::Dimension(format!(
            "model covers {} layer(s), circuit has {n}",
            model.n_layers()
        )));
    }
    plan.validate(n)?;
    let segments = plan.segments(n);
    let parts = segments
        .into_par_iter()
        .zip(plan.methods.par_iter())
        .map(|(range, &method)| segment_sum_norm(circuit, model, range, method, cap, settings))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = parts.iter().sum();
    Ok(GammaResult {
        value: total / n as f64,
        method: GammaMethod::Partition,
        argmax_theta: None,
        certified: !plan.methods.contains(&GammaMethod::Opt),
        diagnostics: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::errmodel::{model_pauli, Pauli};

    fn id_circuit(layers: usize) -> Circuit {
        Circuit::from_gates(1, (0..layers).map(|_| Gate::named("id", &[], &[0]).unwrap()).collect()).unwrap()
    }

    fn quick() -> OptSettings {
        OptSettings {
            starts: 8,
            ..OptSettings::default()
        }
    }

    #[test]
    fn single_segment_matches_base_method() {
        let circuit = Circuit::from_gates(
            1,
            vec![
                Gate::named("h", &[], &[0]).unwrap(),
                Gate::named("rx", &[0.4], &[0]).unwrap(),
                Gate::named("ry", &[1.2], &[0]).unwrap(),
            ],
        )
        .unwrap();
        let m = model_pauli(&circuit, Pauli::Y, 0.1).unwrap();
        for method in [GammaMethod::Vertex, GammaMethod::Norm] {
            let part = gamma_partitioned(&circuit, &m, &PartitionPlan::uniform(vec![], method), 22, &quick()).unwrap();
            let whole = match method {
                GammaMethod::Vertex => cohbound::gamma_vertex(&circuit, &m).unwrap(),
                _ => cohbound::gamma_norm(&circuit, &m).unwrap(),
            };
            assert!((part.value - whole.value).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_circuit_split() {
        let circuit = id_circuit(4);
        let m = model_pauli(&circuit, Pauli::Z, 0.1).unwrap();
        let plan = PartitionPlan::uniform(vec![2], GammaMethod::Vertex);
        let part = gamma_partitioned(&circuit, &m, &plan, 22, &quick()).unwrap();
        assert!((part.value - 1.0).abs() < 1e-14);
        assert!((cohbound::gamma_vertex(&circuit, &m).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn auto_plan_respects_cap() {
        let circuit = id_circuit(16);
        let m = model_pauli(&circuit, Pauli::Z, 0.1).unwrap();
        let plan = PartitionPlan::auto(&m, 5).unwrap();
        plan.validate(16).unwrap();
        for range in plan.segments(16) {
            assert!(variables(&m, range) <= 5);
        }
        assert!(PartitionPlan::auto(&model_pauli(&circuit, Pauli::Z, 0.1).unwrap(), 0).is_err());
    }

    #[test]
    fn invalid_plans() {
        let circuit = id_circuit(4);
        let m = model_pauli(&circuit, Pauli::Z, 0.1).unwrap();
        for cuts in [vec![0], vec![4], vec![2, 2], vec![3, 1]] {
            let plan = PartitionPlan::uniform(cuts, GammaMethod::Vertex);
            assert!(gamma_partitioned(&circuit, &m, &plan, 22, &quick()).is_err());
        }
        let plan = PartitionPlan {
            cut_points: vec![2],
            methods: vec![GammaMethod::Vertex],
        };
        assert!(plan.validate(4).is_err());
    }

    #[test]
    fn oversized_vertex_segment_is_split() {
        let circuit = id_circuit(6);
        let m = model_pauli(&circuit, Pauli::X, 0.1).unwrap();
        let plan = PartitionPlan::uniform(vec![], GammaMethod::Vertex);
        let part = gamma_partitioned(&circuit, &m, &plan, 2, &quick()).unwrap();
        assert!((part.value - 1.0).abs() < 1e-14);
    }
}
