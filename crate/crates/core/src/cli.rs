//! The `abg` command-line front-end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 infeasible
//! problem, 1 internal error. Results go to `--out` (or `--out-dir`), a short
//! summary to stdout and diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, ExperimentConfig};
use crate::fit::{fit_abg, fit_upper_bound, FitOptions};
use crate::model::{db_to_linear, linear_to_db, AbgParams, MetricSample};
use crate::multi_user::{maxmin_bisection, UserLink, DEFAULT_DELTA};
use crate::single_user::{adaptive_power, dinkelbach, EeProblem, DEFAULT_XI};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "abg", version, about = "ABG link-quality model and power allocation")]
pub struct Cli {
    /// Seed for stochastic steps; required by `fit`, `fit-bits` and
    /// `experiment` (unless the experiment file carries one).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit ABG coefficients to an `x,y[,weight]` CSV of (SNR, metric) samples.
    Fit(FitArgs),
    /// Fit bit-scaling coefficients to an `x,y[,weight]` CSV of (bits, ceiling).
    FitBits(FitArgs),
    /// Evaluate an ABG curve at one SNR.
    Eval(EvalArgs),
    /// SNR needed to reach a target metric value.
    SnrFor(SnrForArgs),
    /// Minimum power meeting a quality threshold on one link.
    Adapt(AdaptArgs),
    /// Energy-efficiency maximization with Dinkelbach's method.
    Ee(EeArgs),
    /// Max-min quality allocation across users under a power budget.
    Maxmin(MaxminArgs),
    /// Run an experiment document.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// The `x` column holds SNR in dB rather than linear SNR.
    #[arg(long)]
    pub x_db: bool,
    #[arg(long)]
    pub multistarts: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Linear SNR.
    #[arg(long, conflicts_with = "snr_db", required_unless_present = "snr_db")]
    pub snr: Option<f64>,
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SnrForArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub target: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gain_sq: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_var: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: f64,
    /// Trace CSV (`iter,v,p,F`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaxminArgs {
    #[arg(long)]
    pub users: PathBuf,
    #[arg(long)]
    pub budget: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Allocation CSV (`user,power,phi`).
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary `{nu, total, iterations}`; defaults to `<out>.json`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

/// Name of the error variant, shown in diagnostics.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "InvalidParameter",
        Error::TargetUnreachable { .. } => "TargetUnreachable",
        Error::LevelUnreachable { .. } => "LevelUnreachable",
        Error::ZeroChannel => "ZeroChannel",
        Error::InfeasibleBox { .. } => "InfeasibleBox",
        Error::LengthMismatch { .. } => "LengthMismatch",
        Error::InsufficientSamples { .. } => "InsufficientSamples",
        Error::NonFinite { .. } => "NonFinite",
        Error::NoDescent { .. } => "NoDescent",
        Error::IterationLimit { .. } => "IterationLimit",
        Error::EmptyUserSet => "EmptyUserSet",
        Error::Config(_) => "Config",
        Error::Io(_) => "Io",
        Error::Json(_) => "Json",
        Error::Csv(_) => "Csv",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_infeasible() {
        return EXIT_INFEASIBLE;
    }
    match e {
        Error::NoDescent { .. } | Error::IterationLimit { .. } | Error::Io(_) => EXIT_INTERNAL,
        _ => EXIT_CONFIG,
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read `{}`: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_input(path)?)
        .map_err(|e| Error::Config(format!("`{}`: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    #[serde(default)]
    weight: Option<f64>,
}

/// Reads an `x,y[,weight]` CSV; a missing or empty weight means 1.
pub fn read_samples(path: &Path, x_db: bool) -> Result<Vec<MetricSample>> {
    let text = read_input(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for (i, row) in reader.deserialize::<SampleRow>().enumerate() {
        let row = row.map_err(|e| Error::Config(format!("`{}` row {}: {e}", path.display(), i + 1)))?;
        let x = if x_db { db_to_linear(row.x) } else { row.x };
        samples.push(MetricSample::weighted(x, row.y, row.weight.unwrap_or(1.0)));
    }
    Ok(samples)
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Config(format!("`--seed` is required for `{command}`")))
}

fn fit_options(args: &FitArgs, seed: u64) -> FitOptions {
    let mut options = FitOptions::with_seed(seed);
    if let Some(n) = args.multistarts {
        options.multistart_count = n;
    }
    if let Some(n) = args.max_iterations {
        options.max_iterations = n;
    }
    if let Some(t) = args.tolerance {
        options.tolerance = t;
    }
    options
}

#[derive(Serialize)]
struct EvalOutput {
    rho: f64,
    value: f64,
    out_of_unit_range: bool,
}

#[derive(Serialize)]
struct SnrOutput {
    target: f64,
    rho: f64,
    snr_db: f64,
    below_range: bool,
}

#[derive(Serialize)]
struct AdaptOutput {
    eta: f64,
    power: f64,
    achieved: f64,
}

/// Executes one parsed invocation, writing the summary to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let seed = require_seed(cli.seed, "fit")?;
            let samples = read_samples(&args.input, args.x_db)?;
            let result = fit_abg(&samples, &fit_options(&args, seed))?;
            write_json(&args.out, &result)?;
            let p = result.params;
            writeln!(
                stdout,
                "alpha={} beta={} gamma={} tau={} sse={} iterations={} converged={}",
                p.alpha(),
                p.beta(),
                p.gamma(),
                p.tau(),
                result.sse,
                result.iterations,
                result.converged
            )?;
        }
        Command::FitBits(args) => {
            let seed = require_seed(cli.seed, "fit-bits")?;
            let samples = read_samples(&args.input, false)?;
            let result = fit_upper_bound(&samples, &fit_options(&args, seed))?;
            write_json(&args.out, &result)?;
            let p = result.params;
            writeln!(
                stdout,
                "c1={} c2={} c3={} c4={} sse={} iterations={} converged={}",
                p.c1(),
                p.c2(),
                p.c3(),
                p.c4(),
                result.sse,
                result.iterations,
                result.converged
            )?;
        }
        Command::Eval(args) => {
            let params: AbgParams = read_json(&args.params)?;
            let rho = match (args.snr, args.snr_db) {
                (Some(r), _) => r,
                (None, Some(db)) => db_to_linear(db),
                (None, None) => return Err(Error::Config("one of `--snr`, `--snr-db` is required".into())),
            };
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(Error::invalid("snr", "must be finite and >= 0", rho));
            }
            let value = params.evaluate(rho);
            writeln!(stdout, "{}", value.value)?;
            if value.out_of_unit_range() {
                eprintln!("note: value lies outside [0, 1]");
            }
            if let Some(out) = &args.out {
                write_json(
                    out,
                    &EvalOutput {
                        rho,
                        value: value.value,
                        out_of_unit_range: value.out_of_unit_range(),
                    },
                )?;
            }
        }
        Command::SnrFor(args) => {
            let params: AbgParams = read_json(&args.params)?;
            let required = params.required_snr(args.target)?;
            writeln!(stdout, "{} ({} dB)", required.rho, linear_to_db(required.rho))?;
            if required.below_range {
                eprintln!("note: target is below the zero-SNR value; returning 0");
            }
            if let Some(out) = &args.out {
                write_json(
                    out,
                    &SnrOutput {
                        target: args.target,
                        rho: required.rho,
                        snr_db: linear_to_db(required.rho),
                        below_range: required.below_range,
                    },
                )?;
            }
        }
        Command::Adapt(args) => {
            let params: AbgParams = read_json(&args.params)?;
            let link = LinkState::new(args.gain_sq, args.noise_var)?;
            let power = adaptive_power(&params, &link, args.eta)?;
            writeln!(stdout, "{power}")?;
            if let Some(out) = &args.out {
                write_json(
                    out,
                    &AdaptOutput {
                        eta: args.eta,
                        power,
                        achieved: params.eval(link.snr(power)),
                    },
                )?;
            }
        }
        Command::Ee(args) => {
            let problem: EeProblem = read_json(&args.problem)?;
            let trace = dinkelbach(&problem, args.xi)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            fs::write(&args.out, buf)?;
            writeln!(
                stdout,
                "p_star={} psi={} iterations={}",
                trace.power,
                trace.efficiency,
                trace.steps.len()
            )?;
            if trace.multiple_stationary {
                eprintln!("note: a subproblem had several stationary points");
            }
        }
        Command::Maxmin(args) => {
            let users: Vec<UserLink> = read_json(&args.users)?;
            let alloc = maxmin_bisection(&users, args.budget, args.delta)?;
            let mut buf = Vec::new();
            alloc.write_csv(&mut buf)?;
            fs::write(&args.out, buf)?;
            let summary_path = args
                .summary
                .clone()
                .unwrap_or_else(|| args.out.with_extension("json"));
            write_json(&summary_path, &alloc.summary())?;
            writeln!(
                stdout,
                "nu={} total={} iterations={}",
                alloc.nu, alloc.total, alloc.iterations
            )?;
        }
        Command::Experiment(args) => {
            let mut config: ExperimentConfig = read_json(&args.config)?;
            if cli.seed.is_some() {
                config.seed = cli.seed;
            }
            if config.seed.is_none() {
                return Err(Error::Config(
                    "`--seed` is required for `experiment` when the config has no `seed`".into(),
                ));
            }
            if args.workers == 0 {
                return Err(Error::invalid("workers", "must be >= 1", 0.0));
            }
            let manifest = run_experiment(&config, &args.out_dir, args.workers)?;
            writeln!(
                stdout,
                "wrote {} to {}",
                manifest.outputs.join(", "),
                args.out_dir.display()
            )?;
        }
    }
    Ok(())
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}
