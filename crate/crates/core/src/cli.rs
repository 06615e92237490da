//! Command driver behind the `netkf` binary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::bounds::compute_bound_report;
use crate::analysis::gap::{compare_filters, covariance_gap_trajectory};
use crate::analysis::moments::exact_gap_moments;
use crate::analysis::montecarlo::{estimate_gap_monte_carlo, fit_envelope};
use crate::analysis::properties::property_suite;
use crate::central::central_run;
use crate::config::parse_config;
use crate::distributed::distributed_run;
use crate::error::{Error, Result};
use crate::netmodel::{AggregatedModel, NetworkModel};
use crate::output;
use crate::sim::{
    build_model, default_five_agent_network, run_experiment_fig2, run_experiment_fig3, simulate, ExperimentOutput,
    InitialCovariance, SimConfig, RNG_ALGORITHM,
};

pub const DEFAULT_EPS: f64 = 1.1;

/// Randomized trials per metric property and for the PSD block inequality.
pub const PROPERTY_TRIALS: usize = 200;
pub const BLOCK_TRIALS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Simulate and run the centralized filter.
    RunCentral,
    /// Simulate and run the distributed filter.
    RunDistributed,
    /// Run both filters on one trajectory and record the gaps.
    Compare,
    /// Covariance gaps and bound constants (plus Monte-Carlo with --runs > 1).
    Bounds,
    /// Randomized checks of the metric properties and auxiliary inequalities.
    PropertySuite,
    /// Dense random initial covariance.
    Fig2,
    /// Block-diagonal initial covariance.
    Fig3,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RunCentral => "run-central",
            Command::RunDistributed => "run-distributed",
            Command::Compare => "compare",
            Command::Bounds => "bounds",
            Command::PropertySuite => "property-suite",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    /// Required except for `property-suite`, `fig2` and `fig3`, which fall
    /// back to the default five-agent network.
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub eps: f64,
    pub runs: Option<usize>,
}

/// Exit codes per error kind; 0 is success and 2 is a usage error.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("ParseError", 3),
    ("ValidationError", 4),
    ("IoError", 5),
    ("InvalidArgument", 6),
    ("DimensionMismatch", 10),
    ("NonSPD", 11),
    ("NonSymmetric", 12),
    ("NonContiguousIndex", 13),
    ("UnknownSubsystem", 14),
    ("SingularInnovation", 20),
    ("SingularCovariance", 21),
    ("NoConvergence", 22),
    ("OrderViolation", 23),
    ("WrongBeliefKind", 30),
    ("MissingBroadcast", 31),
    ("StaleBroadcast", 32),
    ("DuplicateBroadcast", 33),
    ("InconsistentStep", 34),
];

pub fn exit_code(e: &Error) -> i32 {
    let kind = e.kind();
    EXIT_CODES.iter().find(|(k, _)| *k == kind).map_or(1, |(_, c)| *c)
}

/// Text for `--help`.
pub fn exit_code_help() -> String {
    let mut s = String::from("Exit codes:\n  0  success\n  2  usage error\n");
    for (kind, code) in EXIT_CODES {
        s.push_str(&format!("  {code:<2} {kind}\n"));
    }
    s.push_str("\nOn failure a JSON error record is printed to stderr.");
    s
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub exit_code: i32,
    pub step: Option<usize>,
    pub node: Option<usize>,
    pub message: String,
}

impl ErrorRecord {
    pub fn new(e: &Error) -> Self {
        let (mut step, mut node) = (None, None);
        let mut cur = e;
        loop {
            match cur {
                Error::AtStep { step: s, source } => {
                    step.get_or_insert(*s);
                    cur = source;
                }
                Error::AtNode { node: n, source } => {
                    node.get_or_insert(*n);
                    cur = source;
                }
                _ => break,
            }
        }
        Self {
            error: e.kind(),
            exit_code: exit_code(e),
            step,
            node,
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

#[derive(Debug, Serialize)]
struct OutputFile {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'static str,
    crate_version: &'static str,
    rng: &'static str,
    seed: Option<u64>,
    horizon: Option<usize>,
    runs: Option<usize>,
    eps: f64,
    config_path: Option<String>,
    config_sha256: Option<String>,
    epsilon1: Option<f64>,
    files: &'a [OutputFile],
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    timestamp: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        f(BufWriter::new(File::create(&path)?))?;
        self.written.push(path);
        Ok(())
    }
}

/// Summary of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Output files in the order they were written, manifest last.
    pub files: Vec<PathBuf>,
}

struct Loaded {
    net: NetworkModel,
    cfg: SimConfig,
    config_path: Option<String>,
    config_sha256: Option<String>,
}

fn load(spec: &ExperimentSpec) -> Result<Loaded> {
    let (net, mut cfg, config_path, config_sha256) = match &spec.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let (net, cfg) = parse_config(&text)?;
            (net, cfg, Some(path.display().to_string()), Some(sha256_hex(text.as_bytes())))
        }
        None => match spec.command {
            Command::PropertySuite | Command::Fig2 | Command::Fig3 => {
                let cfg = SimConfig {
                    horizon: 60,
                    seed: 42,
                    initial_covariance: InitialCovariance::Subsystems,
                    runs: 1,
                    prior_mean: None,
                };
                (default_five_agent_network(), cfg, None, None)
            }
            _ => {
                return Err(Error::InvalidArgument(format!("{} requires --config", spec.command.name())));
            }
        },
    };
    if let Some(seed) = spec.seed {
        cfg.seed = seed;
    }
    if let Some(h) = spec.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = spec.runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    Ok(Loaded {
        net,
        cfg,
        config_path,
        config_sha256,
    })
}

/// Monte-Carlo batch with the envelope fitted on the first quarter of the
/// horizon; writes `monte_carlo.csv` and returns the fitted report rows.
fn monte_carlo_outputs(
    out: &mut Outputs,
    net: &NetworkModel,
    model: &AggregatedModel,
    cfg: &SimConfig,
    report: crate::analysis::bounds::BoundReport,
) -> Result<crate::analysis::bounds::BoundReport> {
    let mc = estimate_gap_monte_carlo(net, model, cfg.horizon, cfg.runs, cfg.seed)?;
    let exact = exact_gap_moments(model, cfg.horizon)?;
    let fit_until = (cfg.horizon / 4).max(1);
    let fit = fit_envelope(&mc.delta_hat_norms, report.psi_eps, report.upsilon, fit_until)?;
    out.write("monte_carlo.csv", |w| output::write_monte_carlo_csv(&mc, &exact, Some(&fit), w))?;
    Ok(report.with_envelope(&fit))
}

fn experiment_outputs(out: &mut Outputs, net: &NetworkModel, cfg: &SimConfig, ex: ExperimentOutput) -> Result<()> {
    let n = ex.model.n();
    out.write("trajectory.csv", |w| output::write_trajectory_csv(&ex.trajectory, w))?;
    out.write("gap_trajectory.csv", |w| output::write_gap_csv(&ex.comparison.gap, n, w))?;
    let report = if cfg.runs > 1 {
        monte_carlo_outputs(out, net, &ex.model, cfg, ex.report)?
    } else {
        ex.report
    };
    out.write("bound_report.csv", |w| output::write_bound_report_csv(&report, w))
}

/// Runs one command and writes its outputs plus `manifest.json` to
/// `spec.out`.
pub fn execute(spec: &ExperimentSpec) -> Result<RunSummary> {
    if !(spec.eps > 1.0) {
        return Err(Error::InvalidArgument(format!("--eps must exceed 1, got {}", spec.eps)));
    }
    let loaded = load(spec)?;
    let (net, cfg) = (&loaded.net, &loaded.cfg);
    let mut out = Outputs::create(&spec.out)?;
    let mut epsilon1 = None;

    match spec.command {
        Command::RunCentral | Command::RunDistributed => {
            let (model, eps1) = build_model(net, cfg)?;
            epsilon1 = eps1;
            let traj = simulate(&model, cfg)?;
            out.write("trajectory.csv", |w| output::write_trajectory_csv(&traj, w))?;
            if spec.command == Command::RunCentral {
                let run = central_run(&model, &traj.measurements)?;
                out.write("central_estimates.csv", |w| output::write_central_csv(&run, w))?;
            } else {
                let run = distributed_run(net, &model, &traj.measurements)?;
                out.write("distributed_estimates.csv", |w| output::write_distributed_csv(&run, w))?;
            }
        }
        Command::Compare => {
            let (model, eps1) = build_model(net, cfg)?;
            epsilon1 = eps1;
            let trajectory = simulate(&model, cfg)?;
            let comparison = compare_filters(net, &model, &trajectory.measurements)?;
            let report = compute_bound_report(&model, spec.eps, cfg.horizon)?;
            let ex = ExperimentOutput {
                model,
                epsilon1,
                trajectory,
                comparison,
                report,
            };
            experiment_outputs(&mut out, net, cfg, ex)?;
        }
        Command::Bounds => {
            let (model, eps1) = build_model(net, cfg)?;
            epsilon1 = eps1;
            let gap = covariance_gap_trajectory(&model, cfg.horizon)?;
            out.write("gap_trajectory.csv", |w| output::write_gap_csv(&gap, model.n(), w))?;
            let mut report = compute_bound_report(&model, spec.eps, cfg.horizon)?;
            if cfg.runs > 1 {
                report = monte_carlo_outputs(&mut out, net, &model, cfg, report)?;
            }
            out.write("bound_report.csv", |w| output::write_bound_report_csv(&report, w))?;
        }
        Command::PropertySuite => {
            let results = property_suite(cfg.seed, PROPERTY_TRIALS, BLOCK_TRIALS)?;
            out.write("property_suite.csv", |w| {
                let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
                csv.write_record(["name", "trials", "violations", "worst_margin"])?;
                for r in &results {
                    let margin = if r.worst_margin.is_nan() { String::new() } else { output::fmt_num(r.worst_margin) };
                    csv.write_record([r.name.to_string(), r.trials.to_string(), r.violations.to_string(), margin])?;
                }
                csv.flush()?;
                Ok(())
            })?;
        }
        Command::Fig2 | Command::Fig3 => {
            let ex = if spec.command == Command::Fig2 {
                run_experiment_fig2(net, cfg, spec.eps)?
            } else {
                run_experiment_fig3(net, cfg, spec.eps)?
            };
            epsilon1 = ex.epsilon1;
            experiment_outputs(&mut out, net, cfg, ex)?;
        }
    }

    let files = out
        .written
        .iter()
        .map(|p| {
            Ok(OutputFile {
                name: p.file_name().expect("output file name").to_string_lossy().into_owned(),
                sha256: sha256_hex(&fs::read(p)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        command: spec.command.name(),
        crate_version: env!("CARGO_PKG_VERSION"),
        rng: RNG_ALGORITHM,
        seed: (spec.command != Command::PropertySuite || spec.seed.is_some()).then_some(cfg.seed),
        horizon: (spec.command != Command::PropertySuite).then_some(cfg.horizon),
        runs: (spec.command != Command::PropertySuite).then_some(cfg.runs),
        eps: spec.eps,
        config_path: loaded.config_path.clone(),
        config_sha256: loaded.config_sha256.clone(),
        epsilon1,
        files: &files,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let manifest_path = spec.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&manifest_path, json + "\n")?;
    out.written.push(manifest_path);
    Ok(RunSummary { files: out.written })
}
