//! `acgd`: configure problems and optimizers, execute seeded runs, write
//! CSV traces, compare methods on a shared evaluation axis, and run the
//! verification suite.
//!
//! Exit codes: 0 success, 1 verification-criterion failure, 2 usage or
//! configuration error, 3 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use accelegrad::config::{RawConfig, RunConfig};
use accelegrad::error::Error;
use accelegrad::harness::{self, Series};
use accelegrad::problems::{self, PNorm, RegressionProblem};
use accelegrad::trace::Trace;
use accelegrad::verify;

#[derive(Parser)]
#[command(
    name = "acgd",
    about = "Adaptive accelerated gradient benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one seeded optimization run and write its trace as CSV.
    Run(Box<RunArgs>),
    /// Run several configurations (and/or ingest existing trace CSVs) and
    /// merge them into one table aligned on the evals axis.
    Compare(CompareArgs),
    /// Run the verification suite headlessly; nonzero exit on any failure.
    Verify(VerifyArgs),
    /// Generate a synthetic regression problem and write it as a binary
    /// container.
    Datagen(DatagenArgs),
}

/// Flags mirror the config-file keys; explicit flags win over `--config`
/// values. `ACGD_SEED` is the fallback seed when neither provides one.
#[derive(Args)]
struct RunArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Problem kind: reg | libsvm | container.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u64>,
    /// Residual exponent for regression problems: 1 | 2.
    #[arg(long)]
    p: Option<u64>,
    /// Target-noise variance for generated problems.
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Data path for libsvm and container problems.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Ambient-dimension override for libsvm files.
    #[arg(long)]
    dim: Option<u64>,
    /// Classification loss: logistic | hinge.
    #[arg(long)]
    loss: Option<String>,
    /// L2 regularization coefficient for classification problems.
    #[arg(long)]
    l2: Option<f64>,

    /// Optimizer: accelegrad | adagrad.
    #[arg(long)]
    opt: Option<String>,
    /// Feasible-set diameter (give exactly one of --D, --rho).
    #[arg(long = "D")]
    diameter: Option<f64>,
    /// Diameter as a multiple: D = 2 * rho * distance(x0, reference).
    #[arg(long)]
    rho: Option<f64>,
    /// Gradient bound seeding the accelegrad step-size denominator.
    #[arg(long = "G")]
    grad_bound: Option<f64>,
    /// Also project the gradient-step sequence onto the ball.
    #[arg(long)]
    project_y: bool,
    /// Leave the mirror-descent-like sequence unprojected.
    #[arg(long)]
    skip_projection: bool,

    /// Oracle: exact | minibatch | noise.
    #[arg(long)]
    oracle: Option<String>,
    /// Minibatch size.
    #[arg(long)]
    b: Option<u64>,
    /// Additive-noise level for the noise oracle.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    oracle_seed: Option<u64>,

    /// Iteration count.
    #[arg(long = "T")]
    iterations: Option<u64>,
    /// Record cadence: a positive integer, `log`, or `auto`.
    #[arg(long)]
    cadence: Option<String>,
    /// Reference-solve budget used when resolving --rho.
    #[arg(long)]
    ref_budget: Option<u64>,
    /// Trace output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn to_raw(&self) -> RawConfig {
        RawConfig {
            problem: self.problem.clone(),
            n: self.n,
            d: self.d,
            p: self.p,
            sigma2: self.sigma2,
            seed: self.seed,
            dataset: self.dataset.as_ref().map(|p| p.display().to_string()),
            dim: self.dim,
            loss: self.loss.clone(),
            l2: self.l2,
            opt: self.opt.clone(),
            diameter: self.diameter,
            rho: self.rho,
            grad_bound: self.grad_bound,
            project_y: if self.project_y { Some(true) } else { None },
            skip_projection: if self.skip_projection {
                Some(true)
            } else {
                None
            },
            oracle: self.oracle.clone(),
            batch: self.b,
            noise_sigma: self.noise_sigma,
            oracle_seed: self.oracle_seed,
            iterations: self.iterations,
            cadence: self.cadence.clone(),
            ref_budget: self.ref_budget,
            out: self.out.as_ref().map(|p| p.display().to_string()),
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Config files to execute and/or existing trace CSVs to ingest
    /// (classified by `.csv` extension). Series are keyed by file stem.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Minibatch sweep: run the single config input once per listed batch
    /// size, keyed `b<size>`.
    #[arg(long, value_delimiter = ',')]
    sweep_b: Option<Vec<u64>>,
    /// Combined CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only checks whose id contains this substring (e.g. `lemma`).
    #[arg(long)]
    only: Option<String>,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify(args) => return cmd_verify(args),
        Command::Datagen(args) => cmd_datagen(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io { .. } => 3,
        _ => 2,
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var("ACGD_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("invalid ACGD_SEED value `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn resolve_run_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let flags = args.to_raw();
    let merged = match &args.config {
        Some(path) => RawConfig::load(path)?.overlay(flags),
        None => flags,
    };
    merged.resolve(env_seed()?)
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    let config = resolve_run_config(args)?;
    let trace = harness::execute(&config)?;
    if config.out.is_none() {
        print!("{}", trace.to_csv_string());
    }
    Ok(())
}

fn series_name(path: &Path, taken: &[String]) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    if !taken.iter().any(|t| t == &stem) {
        return stem;
    }
    let mut k = 2;
    loop {
        let candidate = format!("{stem}-{k}");
        if !taken.iter().any(|t| t == &candidate) {
            return candidate;
        }
        k += 1;
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let fallback = env_seed()?;
    let mut names: Vec<String> = Vec::new();
    let mut configs: Vec<(String, RunConfig)> = Vec::new();
    let mut external: Vec<Series> = Vec::new();

    let mut config_inputs = 0usize;
    for input in &args.inputs {
        let is_csv = input
            .extension()
            .map(|e| e.eq_ignore_ascii_case("csv"))
            .unwrap_or(false);
        if is_csv {
            let name = series_name(input, &names);
            names.push(name.clone());
            external.push(Series {
                name,
                trace: Trace::read_csv(input)?,
            });
        } else {
            config_inputs += 1;
            let raw = RawConfig::load(input)?;
            match &args.sweep_b {
                Some(batches) => {
                    for &batch in batches {
                        let mut variant = raw.clone();
                        variant.oracle = Some("minibatch".to_string());
                        variant.batch = Some(batch);
                        let name = format!("b{batch}");
                        names.push(name.clone());
                        configs.push((name, variant.resolve(fallback)?));
                    }
                }
                None => {
                    let name = series_name(input, &names);
                    names.push(name.clone());
                    configs.push((name, raw.resolve(fallback)?));
                }
            }
        }
    }
    if args.sweep_b.is_some() && config_inputs != 1 {
        return Err(Error::InvalidArgument(
            "--sweep-b needs exactly one config input".into(),
        ));
    }

    let mut series = harness::execute_all(configs)?;
    series.extend(external);
    let merged = harness::merge_on_evals(&series)?;
    match &args.out {
        Some(path) => std::fs::write(path, merged).map_err(|e| Error::io(path.clone(), e))?,
        None => print!("{merged}"),
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let reports = verify::run_checks(args.only.as_deref());
    if reports.is_empty() {
        eprintln!(
            "error: no check matches `{}`",
            args.only.unwrap_or_default()
        );
        return 2;
    }
    let mut all_passed = true;
    for report in &reports {
        println!("{}", report.line());
        all_passed &= report.passed;
    }
    if all_passed {
        0
    } else {
        1
    }
}

fn cmd_datagen(args: DatagenArgs) -> Result<(), Error> {
    if args.n == 0 || args.d == 0 {
        return Err(Error::InvalidArgument("n and d must be >= 1".into()));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let p = PNorm::from_exponent(args.p)?;
    let problem =
        RegressionProblem::generate(args.n as usize, args.d as usize, args.sigma2, p, seed)?;
    problems::write_problem(&problem, &args.out)?;
    eprintln!(
        "wrote {} ({}x{}, p={}, sigma2={}, seed={seed})",
        args.out.display(),
        args.n,
        args.d,
        args.p,
        args.sigma2
    );
    Ok(())
}
