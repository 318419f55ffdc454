//! Command-line front end. Every command is a pure function of its flags;
//! the binary in `src/bin` only forwards `std::env::args` to [`run`].

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::format::MatrixJson;
use crate::interferometer::{self, FieldSetup, FieldVariant};
use crate::kraus;
use crate::lindblad::{self, DecoherenceMode, DecoherenceSpec, SystemHamiltonian};
use crate::linalg;
use crate::measures;
use crate::state::{self, bell_state, from_pure, DensityMatrix};
use crate::tomography::{self, CountRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVALID_OUTPUT: i32 = 4;

/// Absolute slack for Monte Carlo elements whose spread is pure round-off.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "decoherence", version, about = "Dephasing and depolarising dynamics of an entangled spin-path qubit pair")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a state with the closed-form solution and report its measures.
    Evolve(RunConfig),
    /// Mixedness and concurrence on a uniform time grid, as CSV.
    Sweep(RunConfig),
    /// Monte Carlo ensemble average next to the closed-form average.
    Ensemble(RunConfig),
    /// Trotterised Kraus channel against the closed-form solution.
    KrausCompare(RunConfig),
    /// Simulated tomography and linear-inversion reconstruction.
    Tomography(RunConfig),
    /// Fit λt = c·σ² from Monte Carlo averages of the singlet.
    Calibrate(RunConfig),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Decoherence mode, A or B.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<DecoherenceMode>,
    /// Decoherence rate λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Evolution time; the end of the grid for `sweep`.
    #[arg(long)]
    pub time: Option<f64>,
    /// Gaussian width of the rotation angles; a comma-separated grid for
    /// `calibrate` (default 0.5,1,1.5,2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    /// Monte Carlo samples (default 100000).
    #[arg(long)]
    pub samples: Option<u64>,
    /// Grid intervals for `sweep` (default 350) or Kraus steps for
    /// `kraus-compare` (default 1024).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// singlet, bell1..bell4, maximally-mixed or file:<path>.
    #[arg(long, default_value = "singlet")]
    pub initial: String,
    /// E1,E2,E3,E4 (default all zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub energies: Vec<f64>,
    /// Field placement for `ensemble` and `calibrate`.
    #[arg(long, default_value = "both_paths_independent", value_parser = parse_variant)]
    pub variant: FieldVariant,
    /// Shots per tomography setting; 0 uses exact probabilities (default 10000).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Reconstruct from this counts file instead of simulating.
    #[arg(long)]
    pub counts_in: Option<PathBuf>,
    /// Also write the simulated counts here.
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

fn parse_mode(s: &str) -> Result<DecoherenceMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<FieldVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => EXIT_NUMERIC,
            Error::InvalidOutput { .. } => EXIT_INVALID_OUTPUT,
            Error::Domain(_) | Error::Validation(_) | Error::Unsupported(_) | Error::Format(_) => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `args` (including the program name), run the command and return
/// the process exit code. Standard output goes to `stdout` when `--out -`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Evolve(c) => cmd_evolve(c, stdout),
        Command::Sweep(c) => cmd_sweep(c, stdout),
        Command::Ensemble(c) => cmd_ensemble(c, stdout),
        Command::KrausCompare(c) => cmd_kraus_compare(c, stdout),
        Command::Tomography(c) => cmd_tomography(c, stdout),
        Command::Calibrate(c) => cmd_calibrate(c, stdout),
    }
}

fn require<T: Copy>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required for this command")))
}

fn single_sigma(c: &RunConfig) -> CliResult<f64> {
    match c.sigma[..] {
        [s] => Ok(s),
        [] => Err(CliError::usage("--sigma is required for this command")),
        _ => Err(CliError::usage("--sigma takes a single value for this command")),
    }
}

fn hamiltonian(c: &RunConfig) -> CliResult<SystemHamiltonian> {
    match c.energies[..] {
        [] => Ok(SystemHamiltonian::degenerate()),
        [a, b, d, e] => Ok(SystemHamiltonian::new([a, b, d, e])?),
        _ => Err(CliError::usage("--energies takes exactly four values")),
    }
}

fn spec(c: &RunConfig) -> CliResult<DecoherenceSpec> {
    let mode = require(c.mode, "mode")?;
    let lambda = require(c.lambda, "lambda")?;
    Ok(DecoherenceSpec::new(mode, lambda, hamiltonian(c)?)?)
}

/// Resolve `--initial`.
pub fn initial_state(name: &str) -> CliResult<DensityMatrix> {
    let named = match name {
        "singlet" => Some(state::experiment_initial()),
        "maximally-mixed" => Some(DensityMatrix::maximally_mixed()),
        "bell1" | "bell2" | "bell3" | "bell4" => {
            let k = name[4..].parse().expect("digit");
            Some(from_pure(&bell_state(k)?))
        }
        _ => None,
    };
    if let Some(s) = named {
        return Ok(s);
    }
    let Some(path) = name.strip_prefix("file:") else {
        return Err(CliError::usage(format!("unknown initial state {name:?}")));
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
    let json: MatrixJson =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{path} is not a matrix document: {e}")))?;
    let m = json.to_matrix()?;
    state::validate(&m).map_err(|e| CliError::usage(format!("{path}: {e}")))
}

fn emit(out: &str, stdout: &mut dyn Write, body: &[u8]) -> CliResult<()> {
    let io_err = |e: io::Error| CliError::usage(format!("cannot write {out}: {e}"));
    if out == "-" {
        stdout.write_all(body).map_err(io_err)
    } else {
        fs::write(out, body).map_err(io_err)
    }
}

fn emit_json<T: Serialize>(out: &str, stdout: &mut dyn Write, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
    text.push('\n');
    emit(out, stdout, text.as_bytes())
}

pub fn cmd_evolve(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = spec(c)?;
    let time = require(c.time, "time")?;
    let rho0 = initial_state(&c.initial)?;
    let rho = lindblad::evolve(&rho0, &spec, time)?;
    let report = measures::measure(&rho)?;
    emit_json(
        &c.out,
        stdout,
        &json!({
            "mode": spec.mode,
            "lambda": spec.lambda,
            "time": time,
            "energies": spec.hamiltonian.energies,
            "state": rho,
            "measures": report,
        }),
    )
}

pub fn cmd_sweep(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let spec = spec(c)?;
    let t_max = require(c.time, "time")?;
    let steps = c.steps.unwrap_or(350);
    let rho0 = initial_state(&c.initial)?;
    let rows = lindblad::sweep(&rho0, &spec, t_max, steps)?;
    let mut buf = Vec::new();
    lindblad::write_sweep_csv(&rows, &mut buf).map_err(|e| CliError::usage(e.to_string()))?;
    emit(&c.out, stdout, &buf)
}

pub fn cmd_ensemble(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mode = require(c.mode, "mode")?;
    let setup = FieldSetup::new(mode, single_sigma(c)?, c.variant)?;
    let samples = c.samples.unwrap_or(100_000);
    let rho0 = initial_state(&c.initial)?;
    let estimate = interferometer::ensemble_average_monte_carlo(&rho0, &setup, samples, c.seed)?;
    let analytic = interferometer::ensemble_average_analytic(&rho0, &setup)?;
    let statistic = estimate.max_deviation_in_stderr(&analytic, ROUNDOFF_FLOOR);
    emit_json(
        &c.out,
        stdout,
        &json!({
            "estimate": estimate,
            "analytic": analytic,
            "max_deviation_over_stderr": statistic,
        }),
    )
}

/// Trotter error against the closed form, and its ratio for halved steps.
#[derive(Debug, Clone, Serialize)]
pub struct KrausComparison {
    pub mode: DecoherenceMode,
    pub lambda: f64,
    pub time: f64,
    pub steps: usize,
    pub max_error: f64,
    pub max_error_half_steps: Option<f64>,
    /// log₂(error(steps/2) / error(steps)).
    pub order_estimate: Option<f64>,
}

pub fn kraus_comparison(
    rho0: &DensityMatrix,
    mode: DecoherenceMode,
    lambda: f64,
    time: f64,
    steps: usize,
) -> crate::Result<KrausComparison> {
    let spec = DecoherenceSpec::degenerate(mode, lambda)?;
    let exact = lindblad::evolve(rho0, &spec, time)?;
    let error = |n: usize| -> crate::Result<f64> {
        Ok(kraus::trotter_evolve(rho0, mode, lambda, time, n)?.max_abs_diff(&exact))
    };
    let max_error = error(steps)?;
    let half = if steps >= 2 { Some(error(steps / 2)?) } else { None };
    let order = half.and_then(|h| (max_error > 0.0 && h > 0.0).then(|| (h / max_error).log2()));
    Ok(KrausComparison {
        mode,
        lambda,
        time,
        steps,
        max_error,
        max_error_half_steps: half,
        order_estimate: order,
    })
}

pub fn cmd_kraus_compare(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mode = require(c.mode, "mode")?;
    let lambda = require(c.lambda, "lambda")?;
    let time = require(c.time, "time")?;
    let steps = c.steps.unwrap_or(1024);
    let rho0 = initial_state(&c.initial)?;
    let report = kraus_comparison(&rho0, mode, lambda, time, steps)?;
    emit_json(&c.out, stdout, &report)
}

pub fn cmd_tomography(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let truth = initial_state(&c.initial)?;
    let shots = c.shots.unwrap_or(10_000);
    let recon = if let Some(path) = &c.counts_in {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let records: Vec<CountRecord> = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{} is not a counts document: {e}", path.display())))?;
        tomography::reconstruct_linear(&records)?
    } else if shots == 0 {
        tomography::reconstruct_from_frequencies(&tomography::exact_frequencies(&truth))?
    } else {
        let records = tomography::simulate_counts(&truth, shots, c.seed)?;
        if let Some(path) = &c.counts_out {
            let text = serde_json::to_string_pretty(&records).map_err(|e| CliError::usage(e.to_string()))?;
            fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        }
        tomography::reconstruct_linear(&records)?
    };
    let error = linalg::frobenius(&(recon.estimate.matrix() - truth.matrix()));
    emit_json(
        &c.out,
        stdout,
        &json!({
            "estimate": recon.estimate,
            "frobenius_residual": recon.frobenius_residual,
            "frobenius_error": error,
            "shots": shots,
            "seed": c.seed,
            "correlators": recon.correlators.values,
            "correlator_stderr": recon.correlators.stderr,
        }),
    )
}

pub fn cmd_calibrate(c: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mode = require(c.mode, "mode")?;
    let sigmas = if c.sigma.is_empty() { vec![0.5, 1.0, 1.5, 2.0] } else { c.sigma.clone() };
    let samples = c.samples.unwrap_or(100_000);
    let report = interferometer::calibrate(mode, c.variant, &sigmas, samples, c.seed)?;
    emit_json(&c.out, stdout, &report)
}
