//! Configuration-driven experiment pipeline, data files and exit codes.

use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::montecarlo::{write_records_csv, write_summary_csv};
use crate::evaluation::{
    assemble_closed_loop, estimate_jmr, generate_data, monte_carlo, performance_metric,
    simulate_closed_loop, step_references, ClosedLoopResponse, ControllerClass,
    DistributedController, MonteCarloConfig, MonteCarloResult,
};
use crate::ideal::{build_ideal_controller, check_realizability, RealizabilityReport};
use crate::identification::{
    build_regressors, default_trim, excitation_check_with, identify_node,
    ControllerParametrization, ExcitationReport, ExcitationThresholds, IdentificationResult,
};
use crate::lti::{frequency_grid, Signal};
use crate::network::presets::NINE_NODE_REDUCED_REMOVED;
use crate::network::{
    simulate_reference, validate_network, MultiSignal, NetworkSpec, ValidationReport,
};
use crate::virtual_signals::{virtual_references_distributed, write_virtual_csv, VirtualData};

/// Process exit code for an error: 2 configuration, 3 network assumption,
/// 4 realizability, 5 excitation, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::InvalidNetwork(_) => 2,
        Error::Assumption(_) => 3,
        Error::Unrealizable(_) => 4,
        Error::Excitation(_) | Error::RankDeficient { .. } => 5,
        _ => 1,
    }
}

/// Controller class of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassConfig {
    Full,
    /// Links without communication, as node-id pairs. Defaults to four
    /// outer links of the 3×3 grid.
    Reduced {
        #[serde(default)]
        removed: Option<Vec<[u32; 2]>>,
    },
    Decentralized,
    Custom {
        label: String,
        parametrization: PathBuf,
    },
}

impl ClassConfig {
    pub fn label(&self) -> String {
        match self {
            ClassConfig::Full => "full".into(),
            ClassConfig::Reduced { .. } => "reduced".into(),
            ClassConfig::Decentralized => "decentralized".into(),
            ClassConfig::Custom { label, .. } => label.clone(),
        }
    }

    /// Parses a class name given on the command line.
    pub fn from_name(name: &str, custom: Option<&Path>) -> Result<Self> {
        match name {
            "full" => Ok(ClassConfig::Full),
            "reduced" => Ok(ClassConfig::Reduced { removed: None }),
            "decentralized" => Ok(ClassConfig::Decentralized),
            "custom" => custom
                .map(|p| ClassConfig::Custom {
                    label: "custom".into(),
                    parametrization: p.to_path_buf(),
                })
                .ok_or_else(|| Error::Config("class custom needs a parametrization file".into())),
            other => Err(Error::Config(format!("unknown controller class {other:?}"))),
        }
    }

    pub fn build(&self, spec: &NetworkSpec, base: &Path) -> Result<ControllerClass> {
        let param = match self {
            ClassConfig::Full => ControllerParametrization::full(spec)?,
            ClassConfig::Reduced { removed } => {
                let removed = match removed {
                    Some(pairs) => pairs
                        .iter()
                        .map(|&[a, b]| Ok((node_index(spec, a)?, node_index(spec, b)?)))
                        .collect::<Result<Vec<_>>>()?,
                    None => default_reduced_links(spec)?,
                };
                ControllerParametrization::reduced(spec, &removed)?
            }
            ClassConfig::Decentralized => ControllerParametrization::decentralized(spec)?,
            ClassConfig::Custom {
                parametrization, ..
            } => ControllerParametrization::from_json_file(spec, base.join(parametrization))?,
        };
        Ok(ControllerClass {
            label: self.label(),
            param,
        })
    }
}

fn node_index(spec: &NetworkSpec, id: u32) -> Result<usize> {
    spec.ids()
        .iter()
        .position(|&k| k == id)
        .ok_or_else(|| Error::Config(format!("unknown node id {id}")))
}

/// Links removed in the default reduced class; defined for the 3×3 grid.
pub fn default_reduced_links(spec: &NetworkSpec) -> Result<Vec<(usize, usize)>> {
    let links = NINE_NODE_REDUCED_REMOVED.to_vec();
    if spec.nodes() == 9 && links.iter().all(|&(i, j)| spec.graph().has_edge(i, j)) {
        Ok(links)
    } else {
        Err(Error::Config(
            "reduced class needs explicit removed links for this network".into(),
        ))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default)]
    pub excitation: ExcitationThresholds,
}

fn default_horizon() -> usize {
    100
}
fn default_sigma_u() -> f64 {
    1.0
}
fn default_sigma_v() -> f64 {
    0.1
}
fn default_seed() -> u64 {
    1
}
fn default_runs() -> usize {
    100
}
fn default_grid() -> usize {
    512
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_classes() -> Vec<ClassConfig> {
    vec![
        ClassConfig::Full,
        ClassConfig::Reduced { removed: None },
        ClassConfig::Decentralized,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Network file, relative to the configuration file.
    pub network: PathBuf,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_sigma_u")]
    pub sigma_u: f64,
    #[serde(default = "default_sigma_v")]
    pub sigma_v: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_classes")]
    pub classes: Vec<ClassConfig>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub trim: Option<usize>,
    #[serde(default = "default_horizon")]
    pub step_horizon: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(network: impl Into<PathBuf>) -> Self {
        serde_json::from_value(serde_json::json!({ "network": network.into() }))
            .expect("defaults deserialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.horizon < 10 {
            return bad("horizon must be at least 10");
        }
        if self.runs < 1 {
            return bad("runs must be at least 1");
        }
        if !(self.sigma_u > 0.0) {
            return bad("sigma_u must be positive");
        }
        if !(self.sigma_v >= 0.0) {
            return bad("sigma_v must be non-negative");
        }
        if self.grid == 0 {
            return bad("grid must have at least one point");
        }
        if self.step_horizon == 0 {
            return bad("step_horizon must be positive");
        }
        if self.classes.is_empty() {
            return bad("at least one controller class is required");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_json_str(&text)
    }
}

/// Loads a network file, reporting any failure as a configuration error.
pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let path = path.as_ref();
    NetworkSpec::from_json_file(path).map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => Error::Config(format!("{}: {e}", path.display())),
        other => other,
    })
}

/// Validation report; `Err(Assumption)` when a network assumption fails.
pub fn check_assumptions(spec: &NetworkSpec, grid: &[f64]) -> Result<ValidationReport> {
    let report = validate_network(spec, grid);
    if report.is_valid() {
        Ok(report)
    } else {
        Err(Error::Assumption(report.messages.join("; ")))
    }
}

/// Realizability report; `Err(Unrealizable)` when a condition fails.
pub fn check_realizable(spec: &NetworkSpec) -> Result<RealizabilityReport> {
    let report = check_realizability(spec);
    if report.is_realizable() {
        Ok(report)
    } else {
        Err(Error::Unrealizable(serde_json::to_string(&report)?))
    }
}

/// Writes `t,u_1..u_L,y_1..y_L`.
pub fn write_data_csv<W: Write>(
    spec: &NetworkSpec,
    u: &MultiSignal,
    y: &MultiSignal,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(spec.ids().iter().map(|id| format!("u_{id}")));
    header.extend(spec.ids().iter().map(|id| format!("y_{id}")));
    w.write_record(&header)?;
    for t in 0..u.horizon() {
        let mut rec = vec![t.to_string()];
        rec.extend(u.channels().iter().map(|c| c.samples[t].to_string()));
        rec.extend(y.channels().iter().map(|c| c.samples[t].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t,u_1..u_L,y_1..y_L`; columns are matched by name.
pub fn read_data_csv<R: Read>(spec: &NetworkSpec, input: R) -> Result<(MultiSignal, MultiSignal)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("data file lacks column {name}")))
    };
    let u_cols = spec
        .ids()
        .iter()
        .map(|id| col(&format!("u_{id}")))
        .collect::<Result<Vec<_>>>()?;
    let y_cols = spec
        .ids()
        .iter()
        .map(|id| col(&format!("y_{id}")))
        .collect::<Result<Vec<_>>>()?;
    let l = spec.nodes();
    let mut u = vec![Vec::new(); l];
    let mut y = vec![Vec::new(); l];
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Config(format!("bad number in data row {:?}", rec.position()))
                })
        };
        for i in 0..l {
            u[i].push(num(u_cols[i])?);
            y[i].push(num(y_cols[i])?);
        }
    }
    Ok((MultiSignal::from_rows(u)?, MultiSignal::from_rows(y)?))
}

/// Identification outcome of one controller class.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub class: String,
    pub rho: Vec<Vec<f64>>,
    pub results: Vec<IdentificationResult>,
    pub excitation: ExcitationReport,
    pub controller: DistributedController,
}

impl Synthesis {
    pub fn diagnostics(&self) -> serde_json::Value {
        serde_json::json!({
            "class": self.class,
            "rho": self.rho,
            "j_bar": self.results.iter().map(|r| r.j_bar).collect::<Vec<_>>(),
            "gram_cond": self.results.iter().map(|r| r.gram_cond).collect::<Vec<_>>(),
            "min_input_cov_eig": self.excitation.min_cov_eig,
            "warnings": self.excitation.warnings,
        })
    }

    pub fn to_json_string(&self, spec: &NetworkSpec) -> Result<String> {
        self.controller
            .to_json_string(spec, Some(self.diagnostics()))
    }
}

/// Virtual signals of the output-coupled network from measured outputs.
pub fn virtual_data(spec: &NetworkSpec, y: &MultiSignal) -> Result<VirtualData> {
    virtual_references_distributed(&spec.output_coupled(), y)
}

/// Virtual references, regressors and per-node least squares for one class.
pub fn synthesize_class(
    spec: &NetworkSpec,
    class: &ControllerClass,
    vd: &VirtualData,
    u: &MultiSignal,
    trim: Option<usize>,
    thresholds: &ExcitationThresholds,
) -> Result<Synthesis> {
    let trim = trim.unwrap_or_else(|| default_trim(&class.param));
    let reg = build_regressors(&class.param, vd, u, trim)?;
    let excitation = excitation_check_with(u, Some(&reg), thresholds);
    let results = reg
        .nodes
        .iter()
        .map(|r| {
            identify_node(r).map_err(|e| match e {
                Error::RankDeficient { node, rank, cols } => Error::Excitation(format!(
                    "class {}: regressors of node {} have rank {rank} < {cols}",
                    class.label,
                    spec.id(node)
                )),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rho: Vec<Vec<f64>> = results.iter().map(|r| r.rho.clone()).collect();
    let controller = class.param.controller(spec, &rho)?;
    Ok(Synthesis {
        class: class.label.clone(),
        rho,
        results,
        excitation,
        controller,
    })
}

/// Frequency metric and step-response `J_MR` of a controller.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub metric: f64,
    pub jmr: f64,
    pub response: ClosedLoopResponse,
    pub y_d: MultiSignal,
}

pub fn evaluate_controller(
    spec: &NetworkSpec,
    ctrl: &DistributedController,
    grid: &[f64],
    r: &MultiSignal,
) -> Result<Evaluation> {
    let metric = performance_metric(spec, ctrl, grid)?;
    let cls = assemble_closed_loop(spec, ctrl)?;
    let response = simulate_closed_loop(&cls, r, None)?;
    let y_d = simulate_reference(spec, r)?;
    let jmr = if response.diverged {
        f64::INFINITY
    } else {
        estimate_jmr(&response.y, &y_d)?
    };
    Ok(Evaluation {
        metric,
        jmr,
        response,
        y_d,
    })
}

/// Identification data and step references of seed `seed`; the same
/// stream as Monte Carlo replicate 0 of that seed.
pub fn seeded_data(
    spec: &NetworkSpec,
    seed: u64,
    horizon: usize,
    sigma_u: f64,
    sigma_v: f64,
    step_horizon: usize,
) -> Result<(MultiSignal, MultiSignal, MultiSignal)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, y) = generate_data(&mut rng, spec, horizon, sigma_u, sigma_v)?;
    let r = step_references(&mut rng, spec.nodes(), step_horizon);
    Ok((u, y, r))
}

#[derive(Clone, Debug)]
pub struct ClassOutcome {
    pub synthesis: Synthesis,
    pub evaluation: Evaluation,
    /// Parameters of the ideal controller, when the class contains it.
    pub rho_ideal: Option<Vec<Vec<f64>>>,
}

impl ClassOutcome {
    /// `max_i ‖ρ*_i - ρ^d_i‖∞`
    pub fn rho_error(&self) -> Option<f64> {
        self.rho_ideal.as_ref().map(|d| {
            d.iter()
                .zip(&self.synthesis.rho)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max)
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub validation: ValidationReport,
    pub realizability: RealizabilityReport,
    pub classes: Vec<ClassOutcome>,
    pub monte_carlo: MonteCarloResult,
}

impl ExperimentSummary {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<14} {:>12} {:>12} {:>12}\n",
            "class", "metric", "J_MR", "rho error"
        );
        for c in &self.classes {
            let err = c
                .rho_error()
                .map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"));
            s.push_str(&format!(
                "{:<14} {:>12.4e} {:>12.4e} {:>12}\n",
                c.synthesis.class, c.evaluation.metric, c.evaluation.jmr, err
            ));
        }
        s.push_str(&format!(
            "\nMonte Carlo, {} replicates\n{:<14} {:>10} {:>10} {:>10} {:>9}\n",
            self.monte_carlo.records.len() / self.classes.len().max(1),
            "class",
            "q1",
            "median",
            "q3",
            "failures"
        ));
        for m in &self.monte_carlo.summaries {
            s.push_str(&format!(
                "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>9}\n",
                m.class, m.q1, m.median, m.q3, m.failures
            ));
        }
        s
    }
}

fn create(dir: &Path, name: &str) -> Result<File> {
    Ok(File::create(dir.join(name))?)
}

/// Long-format step-response traces: `class,t,node,r,y_d,y,u`.
pub fn write_traces_csv<W: Write>(
    spec: &NetworkSpec,
    r: &MultiSignal,
    runs: &[(&str, &Evaluation)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "t", "node", "r", "y_d", "y", "u"])?;
    for (label, ev) in runs {
        for t in 0..r.horizon() {
            for i in 0..spec.nodes() {
                let at = |s: &Signal| s.samples[t].to_string();
                w.write_record([
                    label.to_string(),
                    t.to_string(),
                    spec.id(i).to_string(),
                    at(r.channel(i)),
                    at(ev.y_d.channel(i)),
                    at(ev.response.y.channel(i)),
                    at(ev.response.u.channel(i)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Full pipeline: validation, realizability, data generation, virtual
/// signals, identification and evaluation per class, Monte Carlo. Writes
/// all artifacts to `cfg.out_dir`; `base` resolves relative input paths.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let spec = load_network(base.join(&cfg.network))?;
    let grid = frequency_grid(cfg.grid);
    let validation = check_assumptions(&spec, &grid)?;
    let realizability = check_realizable(&spec)?;
    let classes = cfg
        .classes
        .iter()
        .map(|c| c.build(&spec, base))
        .collect::<Result<Vec<_>>>()?;

    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let ideal = build_ideal_controller(&spec)?;
    create(out, "ideal_controller.json")?
        .write_all(ideal.to_json_string(&spec, None)?.as_bytes())?;

    let (u, y, r) = seeded_data(
        &spec,
        cfg.seed,
        cfg.horizon,
        cfg.sigma_u,
        cfg.sigma_v,
        cfg.step_horizon,
    )?;
    write_data_csv(&spec, &u, &y, create(out, "data.csv")?)?;
    let vd = virtual_data(&spec, &y)?;
    write_virtual_csv(&spec, &vd, create(out, "virtual.csv")?)?;

    let mut outcomes = Vec::with_capacity(classes.len());
    for class in &classes {
        let synthesis =
            synthesize_class(&spec, class, &vd, &u, cfg.trim, &cfg.tolerances.excitation)?;
        create(out, &format!("controller_{}.json", class.label))?
            .write_all(synthesis.to_json_string(&spec)?.as_bytes())?;
        let evaluation = evaluate_controller(&spec, &synthesis.controller, &grid, &r)?;
        let rho_ideal = class.param.ideal_parameters(&spec).ok();
        outcomes.push(ClassOutcome {
            synthesis,
            evaluation,
            rho_ideal,
        });
    }

    let mut w = csv::Writer::from_writer(create(out, "evaluation.csv")?);
    w.write_record(["class", "metric", "jmr", "rho_error"])?;
    for c in &outcomes {
        w.write_record([
            c.synthesis.class.clone(),
            format!("{:e}", c.evaluation.metric),
            format!("{:e}", c.evaluation.jmr),
            c.rho_error().map(|e| format!("{e:e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let traces: Vec<(&str, &Evaluation)> = outcomes
        .iter()
        .map(|c| (c.synthesis.class.as_str(), &c.evaluation))
        .collect();
    write_traces_csv(&spec, &r, &traces, create(out, "traces.csv")?)?;

    let mc = monte_carlo(&MonteCarloConfig {
        spec: spec.clone(),
        classes,
        horizon: cfg.horizon,
        sigma_u: cfg.sigma_u,
        sigma_v: cfg.sigma_v,
        seed: cfg.seed,
        runs: cfg.runs,
        grid,
        trim: cfg.trim,
        step_horizon: cfg.step_horizon,
    });
    write_records_csv(&mc.records, create(out, "replicates.csv")?)?;
    write_summary_csv(&mc.summaries, create(out, "summary.csv")?)?;

    Ok(ExperimentSummary {
        validation,
        realizability,
        classes: outcomes,
        monte_carlo: mc,
    })
}

/// [`run_experiment`] on a configuration file; relative paths in the file
/// are resolved against its directory.
pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentSummary> {
    let path = path.as_ref();
    let cfg = ExperimentConfig::from_json_file(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    run_experiment(&cfg, base)
}
