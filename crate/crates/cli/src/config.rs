//! Run configuration: one JSON document with circuit, model, analysis,
//! design and channel blocks. Command-line flags override its keys.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qrobust_core::chanbound::{ChannelErrorModel, FminSettings};
use qrobust_core::circuit::qasm::parse_circuit;
use qrobust_core::circuit::{build_jones_pulse, build_qft, build_reference_design_pulse};
use qrobust_core::cohbound::GammaMethod;
use qrobust_core::design::{BoundRoute, Constraint, ModelSpec, RotationGate, WeightedGamma};
use qrobust_core::errmodel::{model_cce, model_pauli, CoherentErrorModel, Correlation, Pauli};
use qrobust_core::matcore::{c, ComplexMatrix};
use qrobust_core::optkit::OptSettings;
use qrobust_core::{Circuit, Gate};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub circuit: Option<CircuitSource>,
    pub model: Option<ModelConfig>,
    pub analysis: AnalysisConfig,
    pub design: DesignConfig,
    pub channel: Option<ChannelConfig>,
}

/// Exactly one of the fields is set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSource {
    /// `qft<n>`, `jones`, `jones:<β>`, `designed`, `rx:<angle>`, `identity:<N>`.
    pub builtin: Option<String>,
    pub file: Option<PathBuf>,
    /// Circuit text inline.
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    PauliX,
    PauliY,
    PauliZ,
    Cce,
    CustomBasis,
}

impl std::str::FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pauli-x" => Ok(Self::PauliX),
            "pauli-y" => Ok(Self::PauliY),
            "pauli-z" => Ok(Self::PauliZ),
            "cce" => Ok(Self::Cce),
            "custom-basis" => Ok(Self::CustomBasis),
            other => Err(format!(
                "unknown model '{other}' (expected pauli-x, pauli-y, pauli-z, cce or custom-basis)"
            )),
        }
    }
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelName,
    /// Pauli and custom models: Hamiltonian bound. Control errors: the
    /// over-rotation bound.
    pub delta: f64,
    #[serde(default = "independent")]
    pub correlation: Correlation,
    /// Custom-basis models: basis matrices per layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<MatrixSpec>>>,
}

fn independent() -> Correlation {
    Correlation::Independent
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    /// Bisect until every segment fits the vertex cap.
    pub auto: bool,
    pub cuts: Vec<usize>,
    /// One per segment; empty means vertex everywhere.
    pub methods: Vec<GammaMethod>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            auto: true,
            cuts: Vec::new(),
            methods: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub delta_n: Grid,
    pub gammas: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            delta_n: Grid {
                lo: 1e-4,
                hi: 1.0,
                n: 41,
            },
            gammas: vec![0.0, 0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub gamma_methods: Vec<GammaMethod>,
    pub direct: bool,
    pub prior: bool,
    pub samples: usize,
    pub deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Grid>,
    pub partition: PartitionConfig,
    pub vertex_cap: usize,
    pub opt: OptSettings,
    pub scaling: ScalingConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            gamma_methods: vec![GammaMethod::Opt, GammaMethod::Norm],
            direct: true,
            prior: true,
            samples: 10_000,
            deltas: Vec::new(),
            delta_grid: None,
            partition: PartitionConfig::default(),
            vertex_cap: qrobust_core::cohbound::VERTEX_CAP,
            opt: OptSettings::default(),
            scaling: ScalingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TemplateConfig {
    Pulses { count: usize },
    Rotations { n: usize, gates: Vec<RotationGateConfig> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationGateConfig {
    pub label: String,
    pub support: Vec<usize>,
    pub generator: MatrixSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    MaximizeBound { model: ModelSpec, route: BoundRoute },
    MinimizeGamma { model: ModelSpec, method: GammaMethod },
    WeightedGammas { terms: Vec<WeightedGamma> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub problem: ProblemConfig,
    /// Outer optimizer; each start runs inner γ and bound searches, so the
    /// default budget is small.
    pub opt: OptSettings,
    /// Where the designed circuit is written; defaults to the report path
    /// with a `.qc` extension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit_out: Option<PathBuf>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            opt: OptSettings {
                starts: 8,
                ..OptSettings::default()
            },
            circuit_out: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Robust composite `R_X(β)` pulses started from the Jones sequence.
    CompositePulse {
        #[serde(default = "quarter_pi")]
        beta: f64,
        #[serde(default = "design_delta")]
        delta: f64,
        #[serde(default = "systematic_threshold")]
        systematic_threshold: f64,
        #[serde(default = "max_distance")]
        max_distance: Option<f64>,
    },
    General {
        template: TemplateConfig,
        initial: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        objective: ObjectiveConfig,
        #[serde(default)]
        constraints: Vec<Constraint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<MatrixSpec>,
    },
}

fn quarter_pi() -> f64 {
    PI / 4.0
}
fn design_delta() -> f64 {
    0.05
}
fn systematic_threshold() -> f64 {
    0.999995
}
fn max_distance() -> Option<f64> {
    Some(1e-3)
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self::CompositePulse {
            beta: quarter_pi(),
            delta: design_delta(),
            systematic_threshold: systematic_threshold(),
            max_distance: max_distance(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModelName {
    Dephasing,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModelConfig {
    pub kind: ChannelModelName,
    pub delta: f64,
    #[serde(default = "independent")]
    pub correlation: Correlation,
    /// Custom models: superoperator generator basis per layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<MatrixSpec>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelModelConfig,
    #[serde(default = "channel_methods")]
    pub gamma_methods: Vec<GammaMethod>,
    /// Error instance for the instance bound; defaults to the upper corner
    /// of the box (largest rates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// Estimate the minimal fidelity of the instance when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmin: Option<FminSettings>,
}

fn channel_methods() -> Vec<GammaMethod> {
    vec![GammaMethod::Opt, GammaMethod::Norm]
}

impl Config {
    /// Reads a config file; relative circuit paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Config = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if let Some(CircuitSource { file: Some(file), .. }) = &mut config.circuit {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }
}

impl CircuitSource {
    /// A flag value is a file when it exists or looks like a path, else a
    /// builtin name.
    pub fn from_flag(value: &str) -> Self {
        let path = Path::new(value);
        if path.is_file() || value.contains(std::path::MAIN_SEPARATOR) || path.extension().is_some_and(|e| e == "qc") {
            Self {
                file: Some(PathBuf::from(value)),
                ..Self::default()
            }
        } else {
            Self {
                builtin: Some(value.to_string()),
                ..Self::default()
            }
        }
    }

    /// The circuit and the text it was read from (part of the run hash).
    pub fn load(&self) -> Result<(Circuit, String), CliError> {
        match (&self.builtin, &self.file, &self.text) {
            (Some(name), None, None) => Ok((builtin_circuit(name)?, format!("builtin:{name}"))),
            (None, Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let circuit = parse_circuit(&text).map_err(|e| CliError::Circuit {
                    path: path.display().to_string(),
                    source: e,
                })?;
                Ok((circuit, text))
            }
            (None, None, Some(text)) => {
                let circuit = parse_circuit(text).map_err(|e| CliError::Circuit {
                    path: "<config circuit.text>".into(),
                    source: e,
                })?;
                Ok((circuit, text.clone()))
            }
            _ => Err(CliError::Usage(
                "circuit block needs exactly one of 'builtin', 'file' or 'text'".into(),
            )),
        }
    }
}

fn parse_number(name: &str, arg: &str) -> Result<f64, CliError> {
    arg.parse().map_err(|_| {
        CliError::Usage(format!(
            "builtin circuit '{name}' needs a numeric argument, got '{arg}'"
        ))
    })
}

pub fn builtin_circuit(name: &str) -> Result<Circuit, CliError> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let circuit = match (head, arg) {
        ("jones", None) => build_jones_pulse(PI / 4.0)?.to_circuit()?,
        ("jones", Some(a)) => build_jones_pulse(parse_number(name, a)?)?.to_circuit()?,
        ("designed", None) => build_reference_design_pulse().to_circuit()?,
        ("rx", Some(a)) => Circuit::from_gates(1, vec![Gate::named("rx", &[parse_number(name, a)?], &[0])?])?,
        ("identity", Some(a)) => {
            let n: usize = a
                .parse()
                .map_err(|_| CliError::Usage(format!("'{name}' needs a layer count")))?;
            Circuit::from_gates(1, (0..n).map(|_| Gate::named("id", &[], &[0])).collect::<Result<_, _>>()?)?
        }
        (h, None) if h.starts_with("qft") => {
            let n: usize = h[3..]
                .parse()
                .map_err(|_| CliError::Usage(format!("'{name}' needs a qubit count, e.g. qft3")))?;
            build_qft(n)?
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown circuit '{name}': not a file and not a builtin (qft<n>, jones, jones:<beta>, designed, rx:<angle>, identity:<N>)"
            )))
        }
    };
    Ok(circuit)
}

pub fn matrix(spec: &MatrixSpec) -> Result<ComplexMatrix, CliError> {
    let rows = spec.len();
    let cols = spec.first().map_or(0, Vec::len);
    if rows == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(CliError::Usage("matrices must be non-empty and rectangular".into()));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        c(spec[i][j][0], spec[i][j][1])
    }))
}

fn matrices(layers: &[Vec<MatrixSpec>]) -> Result<Vec<Vec<ComplexMatrix>>, CliError> {
    layers.iter().map(|l| l.iter().map(matrix).collect()).collect()
}

impl ModelConfig {
    pub fn build(&self, circuit: &Circuit) -> Result<CoherentErrorModel, CliError> {
        let model = match self.kind {
            ModelName::PauliX => model_pauli(circuit, Pauli::X, self.delta)?,
            ModelName::PauliY => model_pauli(circuit, Pauli::Y, self.delta)?,
            ModelName::PauliZ => model_pauli(circuit, Pauli::Z, self.delta)?,
            ModelName::Cce => model_cce(circuit, self.delta)?,
            ModelName::CustomBasis => {
                let basis = self
                    .basis
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("custom model needs a 'basis' list per layer".into()))?;
                CoherentErrorModel::custom(circuit.n_qubits(), matrices(basis)?, self.delta)?
            }
        };
        Ok(model.with_correlation(self.correlation)?)
    }
}

impl ChannelModelConfig {
    pub fn build(&self, n_qubits: usize, n_layers: usize) -> Result<ChannelErrorModel, CliError> {
        let model = match self.kind {
            ChannelModelName::Dephasing => ChannelErrorModel::dephasing(n_qubits, n_layers, self.delta)?,
            ChannelModelName::Custom => {
                let basis = self
                    .basis
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("custom channel model needs a 'basis' list per layer".into()))?;
                ChannelErrorModel::new(n_qubits, matrices(basis)?, self.delta)?
            }
        };
        Ok(model.with_correlation(self.correlation))
    }
}

impl TemplateConfig {
    pub fn build(&self) -> Result<qrobust_core::design::Template, CliError> {
        use qrobust_core::design::Template;
        Ok(match self {
            Self::Pulses { count } => Template::Pulses { count: *count },
            Self::Rotations { n, gates } => Template::Rotations {
                n: *n,
                gates: gates
                    .iter()
                    .map(|g| {
                        Ok(RotationGate {
                            label: g.label.clone(),
                            support: g.support.clone(),
                            generator: matrix(&g.generator)?,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
            },
        })
    }
}
