//! Command implementations. Each builds the effective configuration, runs
//! the library and hands one result document to `emit`.

use std::fmt::Write as _;
use std::path::PathBuf;

use qrobust_core::chanbound::{self, ChannelBoundResult, FminSettings};
use qrobust_core::circuit::qasm::print_circuit;
use qrobust_core::cohbound::{self, FidelityBound, GammaMethod, GammaResult};
use qrobust_core::design::{self, DesignProblem, DesignReport, FidelityTerm, ModelSpec, Objective};
use qrobust_core::errmodel::{CoherentErrorModel, Correlation, ModelKind};
use qrobust_core::mcsample::{self, format_float, SampleStats, ScalingPoint, SweepConfig, SweepTable};
use qrobust_core::partition::{self, PartitionPlan};
use qrobust_core::{Circuit, PulseSequence};
use serde::Serialize;

use crate::config::{
    AnalysisConfig, ChannelConfig, ChannelModelConfig, ChannelModelName, CircuitSource, Config, Grid, ModelConfig,
    ModelName, ObjectiveConfig, ProblemConfig,
};
use crate::output::{display_bound, json_document, Provenance};
use crate::{AnalysisArgs, ChannelArgs, Cli, CliError, Command, DesignArgs, Format};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    config.seed = Some(seed);
    config.analysis.opt.seed = seed;
    match &cli.command {
        Command::Bound(args) => bound(cli, config, args),
        Command::Gamma(args) => {
            if let Some(cuts) = &args.cuts {
                config.analysis.partition.auto = false;
                config.analysis.partition.cuts = cuts.clone();
            }
            gamma(cli, config, &args.analysis)
        }
        Command::Sweep(args) => {
            if let Some(deltas) = &args.deltas {
                config.analysis.deltas = deltas.clone();
                config.analysis.delta_grid = None;
            }
            if let Some(grid) = &args.delta_grid {
                config.analysis.delta_grid = Some(parse_grid(grid)?);
                config.analysis.deltas.clear();
            }
            if let Some(samples) = args.samples {
                config.analysis.samples = samples;
            }
            if args.scaling {
                scaling(cli, config)
            } else {
                sweep(cli, config, &args.analysis)
            }
        }
        Command::Sample(args) => {
            if let Some(samples) = args.samples {
                config.analysis.samples = samples;
            }
            sample(cli, config, &args.analysis)
        }
        Command::Design(args) => run_design(cli, config, args),
        Command::Channel(args) => channel(cli, config, args),
    }
}

fn parse_grid(text: &str) -> Result<Grid> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("--delta-grid expects lo:hi:n, got '{text}'"));
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    Ok(Grid {
        lo: lo.parse().map_err(|_| bad())?,
        hi: hi.parse().map_err(|_| bad())?,
        n: n.parse().map_err(|_| bad())?,
    })
}

/// Folds the shared analysis flags into the configuration.
fn apply_analysis(config: &mut Config, args: &AnalysisArgs, default_delta: Option<f64>) -> Result<()> {
    if let Some(circuit) = &args.circuit {
        config.circuit = Some(CircuitSource::from_flag(circuit));
    }
    match (&mut config.model, args.model) {
        (Some(model), kind) => {
            if let Some(kind) = kind {
                model.kind = kind;
            }
            if let Some(delta) = args.delta {
                model.delta = delta;
            }
        }
        (None, Some(kind)) => {
            let delta = args.delta.or(default_delta).ok_or_else(|| {
                CliError::Usage("the error level is missing: pass --delta or set model.delta in the config".into())
            })?;
            config.model = Some(ModelConfig {
                kind,
                delta,
                correlation: Correlation::Independent,
                basis: None,
            });
        }
        (None, None) => {}
    }
    if let (Some(model), Some(correlation)) = (&mut config.model, args.correlation) {
        model.correlation = correlation;
    }
    if let Some(methods) = &args.gamma_method {
        config.analysis.gamma_methods = methods.clone();
    }
    if let Some(starts) = args.starts {
        config.analysis.opt.starts = starts;
    }
    Ok(())
}

fn load_circuit(config: &Config) -> Result<(Circuit, String)> {
    config
        .circuit
        .as_ref()
        .ok_or_else(|| CliError::Usage("no circuit: pass --circuit or set the config circuit block".into()))?
        .load()
}

fn model_config(config: &Config) -> Result<&ModelConfig> {
    config
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("no error model: pass --model or set the config model block".into()))
}

#[derive(Debug, Serialize)]
struct CircuitInfo {
    n_qubits: usize,
    layers: usize,
}

impl From<&Circuit> for CircuitInfo {
    fn from(c: &Circuit) -> Self {
        Self {
            n_qubits: c.n_qubits(),
            layers: c.len(),
        }
    }
}

/// γ by one method; partition plans come from the analysis block.
fn gamma_by(
    method: GammaMethod,
    circuit: &Circuit,
    model: &CoherentErrorModel,
    analysis: &AnalysisConfig,
) -> Result<(GammaResult, Option<PartitionPlan>)> {
    Ok(match method {
        GammaMethod::Opt => (cohbound::gamma_opt(circuit, model, &analysis.opt)?, None),
        GammaMethod::Vertex => (
            cohbound::gamma_vertex_capped(circuit, model, analysis.vertex_cap)?,
            None,
        ),
        GammaMethod::Norm => (cohbound::gamma_norm(circuit, model)?, None),
        GammaMethod::Partition => {
            let p = &analysis.partition;
            let plan = if p.auto {
                PartitionPlan::auto(model, analysis.vertex_cap)?
            } else if p.methods.is_empty() {
                PartitionPlan::uniform(p.cuts.clone(), GammaMethod::Vertex)
            } else {
                PartitionPlan {
                    cut_points: p.cuts.clone(),
                    methods: p.methods.clone(),
                }
            };
            let g = partition::gamma_partitioned(circuit, model, &plan, analysis.vertex_cap, &analysis.opt)?;
            (g, Some(plan))
        }
    })
}

fn method_name(method: GammaMethod) -> &'static str {
    match method {
        GammaMethod::Opt => "opt",
        GammaMethod::Vertex => "vertex",
        GammaMethod::Norm => "norm",
        GammaMethod::Partition => "partition",
    }
}

/// Writes the document and, when it goes to a file, prints the summary.
fn emit<T: Serialize>(
    cli: &Cli,
    provenance: &Provenance,
    default_format: Format,
    result: &T,
    csv: String,
    summary: &str,
) -> Result<()> {
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => json_document(provenance, result).map_err(|e| CliError::Output(e.to_string()))?,
        Format::Csv => provenance.csv_comment() + &csv,
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
            print!("{summary}");
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn provenance(schema: &str, config: &Config, command: &str, circuit_text: &str) -> Result<Provenance> {
    let json = serde_json::to_string(config).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(Provenance::new(
        schema,
        config.seed.unwrap_or(0),
        &[command.as_bytes(), json.as_bytes(), circuit_text.as_bytes()],
    ))
}

#[derive(Debug, Serialize)]
struct GammaBound {
    gamma: GammaResult,
    bound: FidelityBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionPlan>,
}

#[derive(Debug, Serialize)]
struct BoundResult<'a> {
    circuit: CircuitInfo,
    model: &'a ModelConfig,
    /// Bound on `‖H_{e,j}‖` after basis normalization.
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct: Option<FidelityBound>,
    gamma: Vec<GammaBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prior: Option<FidelityBound>,
    notes: Vec<String>,
}

fn bound(cli: &Cli, mut config: Config, args: &AnalysisArgs) -> Result<()> {
    apply_analysis(&mut config, args, None)?;
    let (circuit, source) = load_circuit(&config)?;
    let spec = model_config(&config)?;
    let model = spec.build(&circuit)?;
    let analysis = &config.analysis;
    let n = circuit.len();
    let mut notes = Vec::new();

    let direct = if analysis.direct {
        Some(cohbound::bound_direct(&circuit, &model, &analysis.opt)?)
    } else {
        None
    };
    let gamma = analysis
        .gamma_methods
        .iter()
        .map(|&method| {
            let (gamma, partition) = gamma_by(method, &circuit, &model, analysis)?;
            let bound = cohbound::bound_gamma(model.delta(), n, gamma.value)?;
            Ok(GammaBound {
                gamma,
                bound,
                partition,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let prior = match (analysis.prior, model.kind()) {
        (true, ModelKind::ControlError) => Some(cohbound::bound_prior(&circuit, spec.delta)?),
        (true, _) => {
            notes.push("prior bound is only defined for control-error models".into());
            None
        }
        (false, _) => None,
    };

    let mut csv = String::from("bound,method,gamma,value\n");
    let mut summary = String::new();
    if let Some(d) = &direct {
        let _ = writeln!(csv, "direct,,NA,{}", format_float(d.value));
        let _ = writeln!(summary, "direct bound        {}", display_bound(d.value));
    }
    for g in &gamma {
        let m = method_name(g.gamma.method);
        let _ = writeln!(
            csv,
            "gamma,{m},{},{}",
            format_float(g.gamma.value),
            format_float(g.bound.value)
        );
        let _ = writeln!(
            summary,
            "gamma bound ({m:<9}) {}  (gamma = {:.6e})",
            display_bound(g.bound.value),
            g.gamma.value
        );
    }
    if let Some(p) = &prior {
        let _ = writeln!(csv, "prior,,NA,{}", format_float(p.value));
        let _ = writeln!(summary, "prior bound         {}", display_bound(p.value));
    }
    let result = BoundResult {
        circuit: (&circuit).into(),
        model: spec,
        delta: model.delta(),
        direct,
        gamma,
        prior,
        notes,
    };
    let prov = provenance("qrobust.bound/1", &config, "bound", &source)?;
    emit(cli, &prov, Format::Json, &result, csv, &summary)
}

#[derive(Debug, Serialize)]
struct GammaEntry {
    #[serde(flatten)]
    gamma: GammaResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<PartitionPlan>,
}

#[derive(Debug, Serialize)]
struct GammaReport<'a> {
    circuit: CircuitInfo,
    model: &'a ModelConfig,
    gammas: Vec<GammaEntry>,
}

fn gamma(cli: &Cli, mut config: Config, args: &AnalysisArgs) -> Result<()> {
    // γ does not depend on the error level.
    apply_analysis(&mut config, args, Some(1.0))?;
    let (circuit, source) = load_circuit(&config)?;
    let spec = model_config(&config)?;
    let model = spec.build(&circuit)?;
    let gammas = config
        .analysis
        .gamma_methods
        .iter()
        .map(|&m| {
            gamma_by(m, &circuit, &model, &config.analysis).map(|(gamma, partition)| GammaEntry { gamma, partition })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("method,gamma,certified\n");
    let mut summary = String::new();
    for g in &gammas {
        let m = method_name(g.gamma.method);
        let _ = writeln!(csv, "{m},{},{}", format_float(g.gamma.value), g.gamma.certified);
        let _ = writeln!(
            summary,
            "gamma ({m:<9}) {:.9e}{}",
            g.gamma.value,
            if g.gamma.certified { "" } else { "  (local optimum)" }
        );
    }
    let result = GammaReport {
        circuit: (&circuit).into(),
        model: spec,
        gammas,
    };
    let prov = provenance("qrobust.gamma/1", &config, "gamma", &source)?;
    emit(cli, &prov, Format::Json, &result, csv, &summary)
}

fn sweep(cli: &Cli, mut config: Config, args: &AnalysisArgs) -> Result<()> {
    apply_analysis(&mut config, args, Some(0.0))?;
    let (circuit, source) = load_circuit(&config)?;
    let spec = model_config(&config)?;
    let template = spec.build(&circuit)?;
    let analysis = &config.analysis;
    if analysis.gamma_methods.contains(&GammaMethod::Partition) {
        return Err(CliError::Usage(
            "sweep supports the opt, vertex and norm gamma methods".into(),
        ));
    }
    let deltas = match &analysis.delta_grid {
        Some(g) => mcsample::log_grid(g.lo, g.hi, g.n)?,
        None => analysis.deltas.clone(),
    };
    if deltas.is_empty() {
        return Err(CliError::Usage(
            "sweep needs --deltas, --delta-grid or analysis.deltas".into(),
        ));
    }
    let sweep_config = SweepConfig {
        deltas,
        direct: analysis.direct,
        gamma_opt: analysis.gamma_methods.contains(&GammaMethod::Opt),
        gamma_norm: analysis.gamma_methods.contains(&GammaMethod::Norm),
        gamma_vertex: analysis.gamma_methods.contains(&GammaMethod::Vertex),
        prior: analysis.prior && matches!(spec.kind, ModelName::Cce),
        samples: analysis.samples,
        seed: analysis.opt.seed,
        opt: analysis.opt.clone(),
    };
    let table: SweepTable = mcsample::sweep(&circuit, &template, &sweep_config)?;
    let csv = mcsample::sweep_csv(&table.rows)?;
    let summary = format!("{} error level(s) evaluated\n", table.rows.len());
    let prov = provenance("qrobust.sweep/1", &config, "sweep", &source)?;
    emit(cli, &prov, Format::Csv, &table, csv, &summary)
}

#[derive(Debug, Serialize)]
struct ScalingReport {
    points: Vec<ScalingPoint>,
}

fn scaling(cli: &Cli, config: Config) -> Result<()> {
    let s = &config.analysis.scaling;
    let grid = mcsample::log_grid(s.delta_n.lo, s.delta_n.hi, s.delta_n.n)?;
    let points = mcsample::scaling_curve(&grid, &s.gammas);
    let csv = mcsample::scaling_csv(&points)?;
    let summary = format!("{} curve(s) of {} point(s)\n", s.gammas.len(), grid.len());
    let prov = provenance("qrobust.scaling/1", &config, "sweep --scaling", "")?;
    emit(cli, &prov, Format::Csv, &ScalingReport { points }, csv, &summary)
}

#[derive(Debug, Serialize)]
struct SampleReport<'a> {
    circuit: CircuitInfo,
    model: &'a ModelConfig,
    stats: SampleStats,
}

fn sample(cli: &Cli, mut config: Config, args: &AnalysisArgs) -> Result<()> {
    apply_analysis(&mut config, args, None)?;
    let (circuit, source) = load_circuit(&config)?;
    let spec = model_config(&config)?;
    let model = spec.build(&circuit)?;
    let stats = mcsample::sample_fidelity(&circuit, &model, config.analysis.samples, config.analysis.opt.seed)?;
    let csv = format!(
        "worst,mean,n_samples,seed\n{},{},{},{}\n",
        format_float(stats.worst),
        format_float(stats.mean),
        stats.n_samples,
        stats.seed
    );
    let summary = format!(
        "worst sampled fidelity {:.12}\nmean sampled fidelity  {:.12}\n",
        stats.worst, stats.mean
    );
    let result = SampleReport {
        circuit: (&circuit).into(),
        model: spec,
        stats,
    };
    let prov = provenance("qrobust.sample/1", &config, "sample", &source)?;
    emit(cli, &prov, Format::Json, &result, csv, &summary)
}

fn design_problem(problem: &ProblemConfig) -> Result<DesignProblem> {
    Ok(match problem {
        &ProblemConfig::CompositePulse {
            beta,
            delta,
            systematic_threshold,
            max_distance,
        } => DesignProblem::composite_pulse(beta, delta, systematic_threshold, max_distance)?,
        ProblemConfig::General {
            template,
            initial,
            lower,
            upper,
            objective,
            constraints,
            target,
        } => DesignProblem {
            template: template.build()?,
            objective: match objective {
                &ObjectiveConfig::MaximizeBound { model, route } => {
                    Objective::MaximizeBound(FidelityTerm { model, route })
                }
                &ObjectiveConfig::MinimizeGamma { model, method } => Objective::MinimizeGamma { model, method },
                ObjectiveConfig::WeightedGammas { terms } => Objective::WeightedSum {
                    cost: None,
                    terms: terms.clone(),
                },
            },
            constraints: constraints.clone(),
            lower: lower.clone(),
            upper: upper.clone(),
            initial: initial.clone(),
            target: target.as_ref().map(crate::config::matrix).transpose()?,
        },
    })
}

fn describe(model: &ModelSpec) -> String {
    let (what, correlation) = match model {
        ModelSpec::ControlError { correlation, .. } => ("control errors".to_string(), correlation),
        ModelSpec::Pauli { pauli, correlation, .. } => (format!("Pauli {pauli:?} errors"), correlation),
    };
    let c = match correlation {
        Correlation::Independent => "independent",
        Correlation::Systematic => "systematic",
    };
    format!("{c} {what}")
}

#[derive(Debug, Serialize)]
struct DesignResult {
    eta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pulses: Option<PulseSequence>,
    /// Designed circuit in the circuit-file format.
    #[serde(skip_serializing_if = "Option::is_none")]
    circuit: Option<String>,
    report: DesignReport,
}

fn run_design(cli: &Cli, mut config: Config, args: &DesignArgs) -> Result<()> {
    if let Some(starts) = args.starts {
        config.design.opt.starts = starts;
    }
    config.design.opt.seed = config.seed.unwrap_or(0);
    if let Some(path) = &args.circuit_out {
        config.design.circuit_out = Some(path.clone());
    }
    let problem = design_problem(&config.design.problem)?;
    let outcome = design::design(&problem, &config.design.opt)?;
    let text = print_circuit(&outcome.circuit).ok();

    let circuit_path: Option<PathBuf> = config
        .design
        .circuit_out
        .clone()
        .or_else(|| cli.out.as_ref().map(|p| p.with_extension("qc")));
    let mut summary = String::new();
    let (before, after) = (&outcome.report.before, &outcome.report.after);
    let _ = writeln!(summary, "objective  {:.9} -> {:.9}", before.objective, after.objective);
    for c in &after.constraints {
        let _ = writeln!(
            summary,
            "constraint {:.9}  {}",
            c.value,
            if c.satisfied { "satisfied" } else { "VIOLATED" }
        );
    }
    for m in &after.models {
        let _ = writeln!(
            summary,
            "{}: direct bound {}",
            describe(&m.model),
            display_bound(m.direct_bound)
        );
    }
    if let Some(path) = &circuit_path {
        match &text {
            Some(t) => {
                std::fs::write(path, t).map_err(|e| CliError::io(path, e))?;
                let _ = writeln!(summary, "wrote {}", path.display());
            }
            None => {
                return Err(CliError::Usage(
                    "the designed circuit uses custom gates and has no circuit-file form".into(),
                ))
            }
        }
    }

    let mut csv = String::from("parameter,initial,designed\n");
    for (i, (a, b)) in problem.initial.iter().zip(&outcome.eta).enumerate() {
        let _ = writeln!(csv, "{i},{},{}", format_float(*a), format_float(*b));
    }
    // The circuit path is an output location, not part of the run.
    let mut hashed = config.clone();
    hashed.design.circuit_out = None;
    let prov = provenance("qrobust.design/1", &hashed, "design", "")?;
    let result = DesignResult {
        eta: outcome.eta,
        pulses: outcome.pulses,
        circuit: text,
        report: outcome.report,
    };
    emit(cli, &prov, Format::Json, &result, csv, &summary)
}

#[derive(Debug, Serialize)]
struct ChannelGamma {
    gamma: GammaResult,
    worst_case: ChannelBoundResult,
}

#[derive(Debug, Serialize)]
struct FminReport {
    value: f64,
    /// Minimizing input state as `[re, im]` amplitudes.
    state: Vec<[f64; 2]>,
    settings: FminSettings,
}

#[derive(Debug, Serialize)]
struct ChannelReport<'a> {
    circuit: CircuitInfo,
    model: &'a ChannelModelConfig,
    gammas: Vec<ChannelGamma>,
    theta: Vec<f64>,
    instance: ChannelBoundResult,
    instance_unitary: ChannelBoundResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    fmin: Option<FminReport>,
}

fn channel(cli: &Cli, mut config: Config, args: &ChannelArgs) -> Result<()> {
    if let Some(circuit) = &args.circuit {
        config.circuit = Some(CircuitSource::from_flag(circuit));
    }
    let seed = config.seed.unwrap_or(0);
    let mut ch = match config.channel.take() {
        Some(ch) => ch,
        None => ChannelConfig {
            model: ChannelModelConfig {
                kind: ChannelModelName::Dephasing,
                delta: args.delta.ok_or_else(|| {
                    CliError::Usage("the error level is missing: pass --delta or set channel.model.delta".into())
                })?,
                correlation: Correlation::Independent,
                basis: None,
            },
            gamma_methods: vec![GammaMethod::Opt, GammaMethod::Norm],
            theta: None,
            fmin: None,
        },
    };
    if let Some(delta) = args.delta {
        ch.model.delta = delta;
    }
    if let Some(correlation) = args.correlation {
        ch.model.correlation = correlation;
    }
    if let Some(methods) = &args.gamma_method {
        ch.gamma_methods = methods.clone();
    }
    if let Some(theta) = &args.theta {
        ch.theta = Some(theta.clone());
    }
    if let Some(samples) = args.fmin_samples {
        ch.fmin = Some(FminSettings {
            samples,
            ..ch.fmin.unwrap_or_default()
        });
    }
    if let Some(fmin) = &mut ch.fmin {
        fmin.seed = seed;
    }
    if let Some(starts) = args.starts {
        config.analysis.opt.starts = starts;
    }
    config.channel = Some(ch);
    let ch = config.channel.as_ref().expect("set above");

    let (circuit, source) = load_circuit(&config)?;
    let layers = chanbound::circuit_superoperators(&circuit)?;
    let model = ch.model.build(circuit.n_qubits(), circuit.len())?;
    let unitary = layers.iter().all(|l| qrobust_core::matcore::is_unitary(l.matrix()));
    let gammas = ch
        .gamma_methods
        .iter()
        .map(|&method| {
            let gamma = chanbound::channel_gamma(&layers, &model, method, &config.analysis.opt)?;
            let worst_case =
                chanbound::bound_channel_worst(circuit.n_qubits(), circuit.len(), model.delta(), gamma.value, unitary)?;
            Ok(ChannelGamma { gamma, worst_case })
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = ch.theta.clone().unwrap_or_else(|| model.half_widths());
    let generators = model.generators(&theta)?;
    let instance = chanbound::bound_channel_instance(&layers, &generators)?;
    let instance_unitary = chanbound::bound_channel_instance_unitary(&layers, &generators)?;
    let fmin = match &ch.fmin {
        Some(settings) => {
            let ideal = chanbound::compose(&layers)?;
            let noisy = chanbound::noisy_channel(&layers, &generators)?;
            let est = chanbound::estimate_fmin(&ideal, &noisy, settings)?;
            Some(FminReport {
                value: est.value,
                state: est.state.iter().map(|z| [z.re, z.im]).collect(),
                settings: settings.clone(),
            })
        }
        None => None,
    };

    let mut csv = String::from("bound,method,gamma,value\n");
    let mut summary = String::new();
    for g in &gammas {
        let m = method_name(g.gamma.method);
        let _ = writeln!(
            csv,
            "worst_case,{m},{},{}",
            format_float(g.gamma.value),
            format_float(g.worst_case.value)
        );
        let _ = writeln!(
            summary,
            "worst-case bound ({m:<6}) {}  (gamma = {:.6e})",
            display_bound(g.worst_case.value),
            g.gamma.value
        );
    }
    let _ = writeln!(csv, "instance,,NA,{}", format_float(instance.value));
    let _ = writeln!(csv, "instance_unitary,,NA,{}", format_float(instance_unitary.value));
    let _ = writeln!(summary, "instance bound           {}", display_bound(instance.value));
    let _ = writeln!(
        summary,
        "instance bound (unitary) {}",
        display_bound(instance_unitary.value)
    );
    if let Some(f) = &fmin {
        let _ = writeln!(csv, "fmin_estimate,,NA,{}", format_float(f.value));
        let _ = writeln!(summary, "estimated minimal fidelity {:.12}", f.value);
    }
    let result = ChannelReport {
        circuit: (&circuit).into(),
        model: &ch.model,
        gammas,
        theta,
        instance,
        instance_unitary,
        fmin,
    };
    let prov = provenance("qrobust.channel/1", &config, "channel", &source)?;
    emit(cli, &prov, Format::Json, &result, csv, &summary)
}
