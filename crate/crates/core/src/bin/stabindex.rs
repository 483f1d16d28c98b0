use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stabindex::checks::{run_verify, VerifyConfig};
use stabindex::montecarlo::{
    convergence_study, log_grid, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SHARDS,
};
use stabindex::report::{estimate_report, render_checks, render_convergence, OutputFormat};
use stabindex::{
    exact_probabilities, EstimationConfig, FamilyKind, IndexMethod, ModelFamily, Tolerance,
};

const EXIT_USAGE: u8 = 1;
const EXIT_ABORT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stabindex",
    version,
    about = "Stability index distributions of random linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the index distribution of one family and order.
    Estimate(EstimateArgs),
    /// Error of one estimated probability along a grid of sample sizes.
    Convergence(ConvergenceArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// table, csv or json.
    #[arg(long, default_value = "table", value_parser = parse_format)]
    format: OutputFormat,
    /// Write to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// cont-sys, cont-eq, disc-sys or disc-eq.
    #[arg(long, value_parser = parse_family)]
    family: FamilyKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Independent random streams (default 64, capped at the sample count).
    #[arg(long)]
    shards: Option<usize>,
    /// rh, eigen or auto.
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    method: IndexMethod,
    #[arg(long, default_value_t = Tolerance::DEFAULT.value(), value_parser = parse_tol)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, value_parser = parse_family)]
    family: FamilyKind,
    #[arg(long)]
    n: usize,
    /// Index k whose probability is tracked; needs a known exact value.
    #[arg(long)]
    index: usize,
    /// Smallest sample size is 10^min-exp.
    #[arg(long, default_value_t = 2)]
    min_exp: u32,
    /// Largest sample size is 10^max-exp.
    #[arg(long, default_value_t = 6)]
    max_exp: u32,
    #[arg(long, default_value_t = 1)]
    per_decade: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Sample size of the Monte Carlo checks.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Tolerance for the indeterminate-fraction checks.
    #[arg(long, default_value_t = Tolerance::DEFAULT.value(), value_parser = parse_tol)]
    tol: f64,
    #[arg(long, default_value_t = 1.0, hide = true)]
    arctan_scale: f64,
    #[command(flatten)]
    output: Output,
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: stabindex::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<IndexMethod, String> {
    s.parse().map_err(|e: stabindex::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: stabindex::Error| e.to_string())
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Tolerance::new(v)
        .map(Tolerance::value)
        .map_err(|e| e.to_string())
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn abort(e: impl ToString) -> Self {
        Failure {
            code: EXIT_ABORT,
            message: e.to_string(),
        }
    }
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::abort(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let family = ModelFamily::new(args.family, args.n).map_err(Failure::usage)?;
    let tol = Tolerance::new(args.tol).map_err(Failure::usage)?;
    let shards = args
        .shards
        .unwrap_or_else(|| DEFAULT_SHARDS.min(args.samples.max(1) as usize));
    let cfg = EstimationConfig::new(family, args.samples, args.seed)
        .with_shards(shards)
        .with_method(args.method)
        .with_tol(tol);
    cfg.validate().map_err(Failure::usage)?;
    let report = estimate_report(&cfg).map_err(Failure::abort)?;
    emit(
        &args.output,
        &report.render(args.output.format).map_err(Failure::abort)?,
    )
}

fn convergence(args: &ConvergenceArgs) -> Result<(), Failure> {
    let family = ModelFamily::new(args.family, args.n).map_err(Failure::usage)?;
    let exact = exact_probabilities(family)
        .get(args.index)
        .copied()
        .flatten()
        .ok_or_else(|| {
            Failure::usage(stabindex::Error::NoExactValue {
                family: format!("{} n={}", args.family, args.n),
                index: args.index,
            })
        })?;
    if args.min_exp > args.max_exp {
        return Err(Failure::usage("--min-exp must not exceed --max-exp"));
    }
    let grid = log_grid(args.min_exp, args.max_exp, args.per_decade);
    let study =
        convergence_study(family, args.index, exact, &grid, args.seed).map_err(Failure::abort)?;
    emit(
        &args.output,
        &render_convergence(&study, args.output.format).map_err(Failure::abort)?,
    )
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        samples: args.samples,
        seed: args.seed,
        tol: Tolerance::new(args.tol).map_err(Failure::usage)?,
        arctan_scale: args.arctan_scale,
        indeterminate_samples: defaults.indeterminate_samples.min(args.samples),
        determinism_samples: defaults.determinism_samples.min(args.samples),
        ..defaults
    };
    let checks = run_verify(&cfg);
    emit(
        &args.output,
        &render_checks(&checks, args.output.format).map_err(Failure::abort)?,
    )?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{failed} check(s) failed"),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Convergence(a) => convergence(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
