//! `iteriso` — fit, decompose, trace and simulate workflows around
//! iterative isotonic regression.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error, 3 criterion
//! degenerate on the whole grid. Requested data goes to stdout (when the
//! destination is `-`); diagnostics and errors go to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iteriso::{
    experiment_mse, generate, jordan_decompose_weighted, load_sample, run, write_experiment,
    write_fit, write_sample, write_trace, write_trace_tidy, Algorithm, DecompositionPair, Error,
    FitRun, Grid, SignalKind, SignalSpec, SortedSample, StoppingPolicy, StoppingRule, TiePolicy,
};

#[derive(Parser)]
#[command(name = "iteriso", version, about = "Iterative isotonic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a sample by alternating isotone/antitone projections
    Fit(FitArgs),
    /// Split a sample into its exact minimum-variation decomposition
    Decompose(DecomposeArgs),
    /// Emit tidy per-iteration diagnostics (k,series,value)
    Trace(TraceArgs),
    /// Generate a seed-deterministic noisy signal on [0,1]
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct InputOpts {
    /// Input CSV with columns x,y and optional w; '-' reads stdin
    input: String,
    /// Reject duplicate abscissas instead of mean-merging them
    #[arg(long)]
    strict_ties: bool,
}

#[derive(Args)]
struct EngineOpts {
    /// Iteration schedule: iir or iibr
    #[arg(long, default_value = "iir")]
    algorithm: String,
    /// Stopping policy: fixed:<k>, tol:<eps>, or criterion:<name>
    /// with <name> one of aic, bic, aicc, gcv
    #[arg(long, default_value = "criterion:aicc")]
    stop: String,
    /// Iteration grid a..b[:step] scanned by a criterion policy
    /// (default 1..min(50, n))
    #[arg(long)]
    grid: Option<String>,
    /// Hard cap on iterations
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    engine: EngineOpts,
    /// Destination of the fit CSV; '-' writes stdout
    #[arg(short, long, default_value = "-")]
    output: String,
    /// Destination of the trace JSON (omitted when not given)
    #[arg(long)]
    trace_out: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputOpts,
    /// Destination of the decomposition CSV; '-' writes stdout
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    engine: EngineOpts,
    /// Destination of the tidy CSV; '-' writes stdout
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of equispaced design points (at least 2)
    #[arg(long)]
    n: usize,
    /// Seed of the noise stream; equal seeds give byte-identical output
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Signal shape: piecewise_constant or bv_smooth_mix
    #[arg(long, default_value = "piecewise_constant")]
    kind: String,
    /// Comma-separated jump locations, strictly inside (0,1)
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    breakpoints: String,
    /// Comma-separated segment levels (bv_smooth_mix: sine amplitude first)
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    levels: String,
    /// Standard deviation of the additive Gaussian noise
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Destination of the sample CSV (columns x,y,truth); '-' writes stdout
    #[arg(short, long, default_value = "-")]
    output: String,
    /// Also fit for this many iterations and tabulate per-k diagnostics
    #[arg(long)]
    experiment_kmax: Option<usize>,
    /// Destination of the experiment table (required with --experiment-kmax)
    #[arg(long)]
    experiment_out: Option<String>,
    /// Iteration schedule for the experiment: iir or iibr
    #[arg(long, default_value = "iir")]
    algorithm: String,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::DegenerateCriterion => 3,
            Error::InvalidSignalSpec(_)
            | Error::NoCap
            | Error::InvalidPolicy(_)
            | Error::InvalidGrid(_)
            | Error::GridOutsideTrace { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn open_input(path: &str) -> CliResult<Box<dyn Read>> {
    if path == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        let file = File::open(path).map_err(Error::from)?;
        Ok(Box::new(file))
    }
}

fn open_output(path: &str) -> CliResult<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(io::stdout()))
    } else {
        let file = File::create(path).map_err(Error::from)?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn read_sample(input: &InputOpts) -> CliResult<SortedSample> {
    let ties = if input.strict_ties {
        TiePolicy::Error
    } else {
        TiePolicy::MergeMean
    };
    Ok(load_sample(open_input(&input.input)?, ties)?)
}

/// Parses --stop/--grid/--max-iter into a validated policy. The grid of a
/// criterion policy defaults to 1..min(50, n) and must stay within the cap.
fn build_policy(engine: &EngineOpts, n: usize) -> CliResult<StoppingPolicy> {
    let parse_usize = |s: &str, what: &str| -> CliResult<usize> {
        s.parse()
            .map_err(|_| CliError::usage(format!("{what} expects an integer, got {s:?}")))
    };
    let rule = match engine.stop.split_once(':') {
        Some(("fixed", k)) => StoppingRule::FixedK(parse_usize(k, "--stop fixed:<k>")?),
        Some(("tol", eps)) => {
            let eps: f64 = eps.parse().map_err(|_| {
                CliError::usage(format!("--stop tol:<eps> expects a number, got {eps:?}"))
            })?;
            StoppingRule::ResidualTol(eps)
        }
        Some(("criterion", name)) => {
            let criterion = name.parse().map_err(CliError::from)?;
            let grid = match &engine.grid {
                Some(spec) => spec.parse::<Grid>().map_err(CliError::from)?,
                None => Grid::through(n.min(50).min(engine.max_iter).max(1))?,
            };
            StoppingRule::Criterion { criterion, grid }
        }
        _ => {
            return Err(CliError::usage(format!(
                "--stop expects fixed:<k>, tol:<eps> or criterion:<name>, got {:?}",
                engine.stop
            )))
        }
    };
    if engine.grid.is_some() && !matches!(rule, StoppingRule::Criterion { .. }) {
        return Err(CliError::usage(
            "--grid only applies to --stop criterion:<name>",
        ));
    }
    Ok(StoppingPolicy::new(rule, Some(engine.max_iter))?)
}

fn run_engine(engine: &EngineOpts, sample: &SortedSample) -> CliResult<FitRun> {
    let algorithm: Algorithm = engine.algorithm.parse()?;
    let policy = build_policy(engine, sample.len())?;
    Ok(run(sample, algorithm, &policy)?)
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let sample = read_sample(&args.input)?;
    let fit = run_engine(&args.engine, &sample)?;
    let state = fit.selected_state();
    let vectors = state.vectors().expect("selected state retains its vectors");
    let pair = DecompositionPair::from_parts_unchecked(
        vectors.u_hat.clone(),
        vectors.b_hat.clone(),
        sample.weighted_mean_y(),
    );
    write_fit(&pair, &vectors.y_hat, &sample, open_output(&args.output)?)?;
    if let Some(path) = &args.trace_out {
        write_trace(&fit.trace, fit.report.as_ref(), open_output(path)?)?;
    }
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> CliResult<()> {
    let sample = read_sample(&args.input)?;
    let pair = jordan_decompose_weighted(sample.y(), sample.w())?;
    write_fit(&pair, sample.y(), &sample, open_output(&args.output)?)?;
    Ok(())
}

fn cmd_trace(args: TraceArgs) -> CliResult<()> {
    let sample = read_sample(&args.input)?;
    let fit = run_engine(&args.engine, &sample)?;
    write_trace_tidy(&fit.trace, fit.report.as_ref(), open_output(&args.output)?)?;
    Ok(())
}

fn parse_floats(spec: &str, what: &str) -> CliResult<Vec<f64>> {
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{what} expects numbers, got {tok:?}")))
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let kind: SignalKind = args.kind.parse()?;
    let spec = SignalSpec {
        kind,
        breakpoints: parse_floats(&args.breakpoints, "--breakpoints")?,
        coefficients: parse_floats(&args.levels, "--levels")?,
        noise_sd: args.noise,
        n: args.n,
        seed: args.seed,
    };
    let (sample, truth) = generate(&spec)?;
    write_sample(&sample, Some(&truth), open_output(&args.output)?)?;

    match (args.experiment_kmax, &args.experiment_out) {
        (None, None) => {}
        (Some(k_max), Some(path)) => {
            let algorithm: Algorithm = args.algorithm.parse()?;
            let rows = experiment_mse(&spec, algorithm, k_max)?;
            write_experiment(&rows, open_output(path)?)?;
        }
        _ => {
            return Err(CliError::usage(
                "--experiment-kmax and --experiment-out must be given together",
            ))
        }
    }
    Ok(())
}
