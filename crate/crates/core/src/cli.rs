//! Command-line front end: `verify`, `figures` and `oracle`.
//!
//! Exit codes: 0 success, 1 a check failed (or an I/O error), 2 usage error,
//! 3 the Fock oracle is infeasible at the requested cutoff.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::broadcast::{capacity_region, write_region_csv};
use crate::channels::{mix, MixingParams, MAX_GAIN};
use crate::fock::{build_state, two_mode_mix, vn_entropy, StateKind};
use crate::inequalities::{
    delta_surface, moe_bound, moe_conjectured, random_qepi_suite, write_delta_csv, DeltaGrid, SuiteConfig, SuiteSummary,
};
use crate::symplectic::GaussianState;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_CUTOFF: usize = 60;
/// Largest per-mode cutoff accepted by `oracle`.
pub const MAX_CUTOFF: usize = 200;
/// Gaussian and Fock output entropies must agree to this.
pub const ENTROPY_GATE: f64 = 1e-5;
/// Entropies of the input shown in the minimum-output-entropy figure.
pub const MOE_ENTROPIES: [f64; 3] = [0.5, 1.0, 1.5];
pub const FIGURE_GRID: usize = 101;
pub const DEFAULT_REGION_LAMBDA: f64 = 0.8;
pub const DEFAULT_REGION_N_BAR: f64 = 15.0;

#[derive(Parser, Debug)]
#[command(name = "qepi", version, about = "Entropy power inequality checks for Gaussian bosonic channels")]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum CommandArg {
    /// Randomised inequality suite (entropy power, linear, Stam, photon-number gap).
    Verify,
    /// Write delta_surface.csv, moe_bounds.csv and region.csv.
    Figures,
    /// Gaussian closed forms against the truncated Fock simulation.
    Oracle,
}

#[derive(Args, Debug)]
struct Flags {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Random trials for `verify`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Beam-splitter transmissivity.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Amplifier gain; selects the amplifier instead of the beam splitter.
    #[arg(long, global = true, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Mean photon number: the broadcast power for `figures`, the thermal input for `oracle`.
    #[arg(long = "n-bar", global = true, allow_negative_numbers = true)]
    n_bar: Option<f64>,
    /// Fock cutoff per mode for `oracle`.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Report file (`verify`, `oracle`) or output directory (`figures`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Figures,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Validated command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub trials: usize,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub n_bar: Option<f64>,
    pub cutoff: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// A rejected command line; `message` is what clap or validation printed.
#[derive(Clone, Debug, PartialEq)]
pub struct UsageError {
    pub message: String,
    /// `--help` and `--version` are reported through this path with exit code 0.
    pub exit_code: i32,
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError { message: format!("error: {}", msg.into()), exit_code: EXIT_USAGE }
}

impl RunConfig {
    /// Parses and validates `args` (including the program name).
    pub fn from_args<I, T>(args: I) -> Result<RunConfig, UsageError>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| UsageError {
            message: e.render().to_string(),
            exit_code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
        })?;
        let command = match cli.command {
            CommandArg::Verify => Command::Verify,
            CommandArg::Figures => Command::Figures,
            CommandArg::Oracle => Command::Oracle,
        };
        let f = cli.flags;
        let config = RunConfig {
            command,
            seed: f.seed.unwrap_or(0),
            trials: f.trials.unwrap_or(DEFAULT_TRIALS),
            lambda: f.lambda,
            kappa: f.kappa,
            n_bar: f.n_bar,
            cutoff: f.cutoff,
            out: f.out,
            format: f.format.unwrap_or(if command == Command::Figures { Format::Csv } else { Format::Json }),
        };
        let reject = |present: bool, flag: &str| {
            if present {
                Err(usage(format!("{flag} is not used by `{}`", command.name())))
            } else {
                Ok(())
            }
        };
        if f.trials == Some(0) {
            return Err(usage("--trials must be >= 1"));
        }
        if let Some(l) = config.lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(usage(format!(
                    "--lambda must lie in [0, 1], got {l}; use --kappa for an amplifier gain"
                )));
            }
        }
        if let Some(k) = config.kappa {
            if !(1.0..=MAX_GAIN).contains(&k) {
                return Err(usage(format!("--kappa must lie in [1, {MAX_GAIN}], got {k}")));
            }
        }
        if config.lambda.is_some() && config.kappa.is_some() {
            return Err(usage("--lambda and --kappa are mutually exclusive"));
        }
        if let Some(n) = config.n_bar {
            if !(n.is_finite() && n >= 0.0) {
                return Err(usage(format!("--n-bar must be finite and >= 0, got {n}")));
            }
        }
        if let Some(d) = config.cutoff {
            if !(1..=MAX_CUTOFF).contains(&d) {
                return Err(usage(format!("--cutoff must lie in [1, {MAX_CUTOFF}], got {d}")));
            }
        }
        match command {
            Command::Verify => {
                reject(config.cutoff.is_some(), "--cutoff")?;
                reject(config.n_bar.is_some(), "--n-bar")?;
            }
            Command::Figures => {
                reject(f.trials.is_some(), "--trials")?;
                reject(config.kappa.is_some(), "--kappa")?;
                reject(config.cutoff.is_some(), "--cutoff")?;
                if config.format != Format::Csv {
                    return Err(usage("figures are written as CSV only"));
                }
                if let Some(l) = config.lambda {
                    if l < 0.5 {
                        return Err(usage(format!("the broadcast region needs --lambda >= 0.5, got {l}")));
                    }
                }
            }
            Command::Oracle => reject(f.trials.is_some(), "--trials")?,
        }
        Ok(config)
    }

    /// Channel selected by `--lambda` / `--kappa` (beam splitter at 1/2 by default).
    pub fn mixing_params(&self) -> crate::Result<MixingParams> {
        match self.kappa {
            Some(k) => MixingParams::amplifier(k),
            None => MixingParams::beam_splitter(self.lambda.unwrap_or(0.5)),
        }
    }
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Figures => "figures",
            Command::Oracle => "oracle",
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Reports without `--out` go to `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            let sink: &mut dyn Write = if e.exit_code == EXIT_OK { stdout } else { stderr };
            let _ = write!(sink, "{}", e.message);
            if !e.message.ends_with('\n') {
                let _ = writeln!(sink);
            }
            return e.exit_code;
        }
    };
    let result = match config.command {
        Command::Verify => cmd_verify(&config, stdout, stderr),
        Command::Figures => cmd_figures(&config, stderr),
        Command::Oracle => cmd_oracle(&config, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Cutoff { .. } => EXIT_INFEASIBLE,
                Error::Domain(_) => EXIT_USAGE,
                _ => EXIT_VIOLATION,
            }
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> crate::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    version: &'a str,
    created_unix: u64,
    files: Vec<String>,
    config: &'a RunConfig,
}

/// Run metadata (including the timestamp) lives next to the outputs so that
/// the outputs themselves are byte-for-byte reproducible.
fn write_sidecar(path: &Path, config: &RunConfig, files: Vec<String>) -> crate::Result<()> {
    let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = Sidecar { command: config.command.name(), version: env!("CARGO_PKG_VERSION"), created_unix, files, config };
    write_atomic(path, serde_json::to_string_pretty(&meta)?.as_bytes())
}

fn sidecar_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    report.with_file_name(name)
}

fn emit(config: &RunConfig, body: &[u8], stdout: &mut dyn Write) -> crate::Result<()> {
    match &config.out {
        Some(path) => {
            write_atomic(path, body)?;
            write_sidecar(&sidecar_path(path), config, vec![path.display().to_string()])
        }
        None => Ok(stdout.write_all(body)?),
    }
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    min_slack: Option<f64>,
    failures: usize,
}

fn verify_csv(summary: &SuiteSummary) -> crate::Result<Vec<u8>> {
    let count = |name: &str| summary.failures.iter().filter(|f| f.check == name).count();
    let rows = [
        CheckRow { check: "qepi", min_slack: Some(summary.min_qepi_slack), failures: count("qepi") },
        CheckRow { check: "linear", min_slack: Some(summary.min_linear_slack), failures: count("linear") },
        CheckRow { check: "stam", min_slack: summary.min_stam_slack, failures: count("stam") },
        CheckRow {
            check: "weighted_fisher",
            min_slack: summary.min_weighted_slack,
            failures: count("weighted_fisher") + count("optimal_weight_reduction"),
        },
        CheckRow { check: "epni_gap", min_slack: Some(summary.min_epni_gap), failures: count("epni_bound") },
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs the randomised suite; exit 0 iff no trial violated anything.
pub fn cmd_verify(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> crate::Result<i32> {
    let suite = SuiteConfig::new(config.trials, config.seed, config.mixing_params()?);
    let summary = random_qepi_suite(&suite)?;
    let body = match config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&summary)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => verify_csv(&summary)?,
    };
    emit(config, &body, stdout)?;
    writeln!(
        stderr,
        "verify: {} trials, {} failures, min qEPI slack {:.3e}",
        config.trials,
        summary.failures.len(),
        summary.min_qepi_slack
    )?;
    Ok(if summary.passed() { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(Serialize)]
struct MoeRow {
    #[serde(rename = "S_bar")]
    s_bar: f64,
    lambda: f64,
    conjectured: f64,
    bound: f64,
}

fn moe_rows() -> crate::Result<Vec<MoeRow>> {
    let mut rows = Vec::new();
    for s in MOE_ENTROPIES {
        for j in 0..FIGURE_GRID {
            let lambda = j as f64 / (FIGURE_GRID - 1) as f64;
            rows.push(MoeRow { s_bar: s, lambda, conjectured: moe_conjectured(s, lambda)?, bound: moe_bound(s, lambda)? });
        }
    }
    Ok(rows)
}

/// Writes the figure data into the `--out` directory (default: current directory).
pub fn cmd_figures(config: &RunConfig, stderr: &mut dyn Write) -> crate::Result<i32> {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;

    let surface = delta_surface(DeltaGrid::default())?;
    let mut delta = Vec::new();
    write_delta_csv(&surface, &mut delta)?;

    let mut moe = csv::Writer::from_writer(Vec::new());
    for row in moe_rows()? {
        moe.serialize(row)?;
    }
    let moe = moe.into_inner().map_err(|e| Error::Io(e.into_error()))?;

    let lambda = config.lambda.unwrap_or(DEFAULT_REGION_LAMBDA);
    let n_bar = config.n_bar.unwrap_or(DEFAULT_REGION_N_BAR);
    let mut region = Vec::new();
    write_region_csv(&capacity_region(lambda, n_bar, FIGURE_GRID)?, &mut region)?;

    let mut files = Vec::new();
    for (name, body) in [("delta_surface.csv", delta), ("moe_bounds.csv", moe), ("region.csv", region)] {
        let path = dir.join(name);
        write_atomic(&path, &body)?;
        files.push(path.display().to_string());
    }
    write_sidecar(&dir.join("figures.meta.json"), config, files)?;
    writeln!(
        stderr,
        "figures: max delta {:.6} at S_bar = {:.4}, lambda = {:.4}",
        surface.refined_max.delta, surface.refined_max.s_bar, surface.refined_max.lambda
    )?;
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub name: String,
    pub gaussian_entropy: f64,
    pub fock_entropy: f64,
    pub difference: f64,
    pub leak: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cutoff: usize,
    pub cases: Vec<OracleCase>,
    pub passed: bool,
}

fn oracle_case(name: String, a: StateKind, b: StateKind, p: &MixingParams, cutoff: usize) -> crate::Result<OracleCase> {
    let gaussian = |k: StateKind| match k {
        StateKind::Vacuum => Ok(GaussianState::vacuum(1)),
        StateKind::Thermal { n } => GaussianState::thermal_photons(1, n),
        _ => Err(Error::domain("oracle cases use vacuum or thermal inputs")),
    };
    let gaussian_entropy = mix(&gaussian(a)?, &gaussian(b)?, p)?.entropy()?;
    let out = two_mode_mix(&build_state(a, cutoff)?, &build_state(b, cutoff)?, p)?;
    let fock_entropy = vn_entropy(&out.state)?;
    let difference = (gaussian_entropy - fock_entropy).abs();
    Ok(OracleCase { name, gaussian_entropy, fock_entropy, difference, leak: out.leak, passes: difference <= ENTROPY_GATE })
}

/// Agreement cases, each fed with thermal(`--n-bar`) and vacuum:
/// the beam splitter (`--lambda`, default 1/2, photons default 1) unless `--kappa`
/// is given, and the amplifier (`--kappa`, default 2, photons default 0) when
/// `--kappa` is given or when neither `--lambda` nor `--n-bar` narrows the suite.
pub fn oracle_suite(config: &RunConfig) -> crate::Result<OracleReport> {
    let cutoff = config.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let mut cases = Vec::new();
    if config.kappa.is_none() {
        let lambda = config.lambda.unwrap_or(0.5);
        let n = config.n_bar.unwrap_or(1.0);
        let input = if n == 0.0 { StateKind::Vacuum } else { StateKind::Thermal { n } };
        cases.push(oracle_case(
            format!("beam_splitter(lambda={lambda}) thermal({n}) x vacuum"),
            input,
            StateKind::Vacuum,
            &MixingParams::beam_splitter(lambda)?,
            cutoff,
        )?);
    }
    let amplifier = config.kappa.is_some() || (config.lambda.is_none() && config.n_bar.is_none());
    if amplifier {
        let kappa = config.kappa.unwrap_or(2.0);
        let n = config.n_bar.unwrap_or(0.0);
        let input = if n == 0.0 { StateKind::Vacuum } else { StateKind::Thermal { n } };
        cases.push(oracle_case(
            format!("amplifier(kappa={kappa}) thermal({n}) x vacuum"),
            input,
            StateKind::Vacuum,
            &MixingParams::amplifier(kappa)?,
            cutoff,
        )?);
    }
    let passed = cases.iter().all(|c| c.passes);
    Ok(OracleReport { cutoff, cases, passed })
}

pub fn cmd_oracle(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> crate::Result<i32> {
    let report = oracle_suite(config)?;
    let body = match config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for c in &report.cases {
                w.serialize(c)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    emit(config, &body, stdout)?;
    for c in &report.cases {
        writeln!(stderr, "oracle: {} |dS| = {:.3e} leak = {:.3e}", c.name, c.difference, c.leak)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VIOLATION })
}
