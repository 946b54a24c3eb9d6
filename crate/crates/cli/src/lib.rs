//! Command line front end: data ingestion, flat configuration files and the
//! `lambda-max`, `fit`, `cv`, `simulate` and `bench-screen` commands.
//!
//! Settings are resolved in three layers: command defaults, then the
//! `--config` file, then individual flags. Every command writes
//! line-delimited `key:value` records (see [`output`]) starting with an echo
//! of the resolved configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Outcome};
pub use config::{Command, RunConfig};
pub use error::{CliError, Result};
pub use output::{parse_records, Record};

#[derive(Debug, Parser)]
#[command(name = "sgl", version, about = "Sparse group lasso for multiclass classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Print the smallest lambda at which every feature block is zero.
    LambdaMax(Flags),
    /// Fit the regularization path and write every solution.
    Fit(Flags),
    /// Cross-validate the path for each alpha.
    Cv(Flags),
    /// Run the Gaussian simulation study.
    Simulate(Flags),
    /// Time a path fit with and without Hessian-bound screening.
    BenchScreen(Flags),
}

impl CliCommand {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            CliCommand::LambdaMax(f) => (Command::LambdaMax, f),
            CliCommand::Fit(f) => (Command::Fit, f),
            CliCommand::Cv(f) => (Command::Cv, f),
            CliCommand::Simulate(f) => (Command::Simulate, f),
            CliCommand::BenchScreen(f) => (Command::BenchScreen, f),
        }
    }
}

macro_rules! flags {
    ($($(#[doc = $doc:literal])* $name:ident),* $(,)?) => {
        /// One flag per configuration key; values use the config file syntax.
        #[derive(Debug, Clone, Default, Args)]
        pub struct Flags {
            /// Flat `key = value` file, applied before the other flags.
            #[arg(long, value_name = "FILE")]
            pub config: Option<PathBuf>,
            $(
                $(#[doc = $doc])*
                #[arg(long, value_name = "VALUE")]
                pub $name: Option<String>,
            )*
        }

        impl Flags {
            /// `(key, value)` for every flag given on the command line.
            pub fn given(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$name {
                        out.push((stringify!($name), v.as_str()));
                    }
                )*
                out
            }

            /// Names of all keys settable by flag.
            pub fn keys() -> &'static [&'static str] {
                &[$(stringify!($name)),*]
            }
        }
    };
}

flags! {
    /// Design matrix file.
    matrix,
    /// Label file, one label per line.
    labels,
    /// Matrix format: auto, dense or sparse.
    format,
    /// Scale every sample to mean 0 and variance 1 (true/false).
    normalize_rows,
    /// Scale every feature to unit variance (true/false).
    standardize,
    /// Also center features when standardizing (true/false).
    center,
    /// Comma-separated alpha values.
    alpha,
    /// Group weight of feature blocks: sqrt-dim or a number.
    gamma,
    /// Parameter weight of feature coefficients: sqrt-dim or a number.
    xi,
    /// Number of lambda values on the default grid.
    n_lambda,
    /// Smallest lambda of the default grid relative to lambda max.
    lambda_min_ratio,
    /// Explicit comma-separated decreasing lambda grid.
    lambdas,
    /// KKT tolerance of the outer loop, relative to the starting gradient.
    tol_outer,
    /// Relative objective change that stops the outer loop.
    tol_objective,
    /// Block change that stops the middle loop.
    tol_middle,
    /// Coordinate change that stops the inner loop.
    tol_inner,
    max_outer,
    max_middle,
    max_inner,
    /// Armijo sufficient-decrease fraction.
    armijo_a,
    /// Armijo step shrink factor.
    armijo_b,
    /// Smallest Armijo step before a stall is reported.
    armijo_min_step,
    /// Inner-loop escape radius relative to the block gradient.
    inner_epsilon,
    /// Hessian-bound screening (true/false).
    screening,
    /// Diagonal Hessian approximation (true/false).
    diagonal_hessian,
    /// Count screened blocks that fail the full zero test (true/false).
    verify_screening,
    /// Cross-validation folds.
    folds,
    /// Random seed.
    seed,
    /// Worker threads; 0 means one per core.
    workers,
    /// Output file; standard output if unset.
    output,
    /// Simulation preset: thin, sparse or dense.
    preset,
    /// Simulation replicates.
    replicates,
    /// Training samples per class.
    per_class,
    /// Number of classes (simulation and synthetic benchmark).
    classes,
    /// Informative features in the simulation.
    p_a,
    /// Noise features in the simulation.
    p_b,
    /// Identity weight of the simulated covariance.
    delta,
    /// Test samples per class in the simulation.
    test_per_class,
    /// Monte Carlo draws for the Bayes rate.
    bayes_draws,
    /// Samples of the synthetic benchmark problem.
    samples,
    /// Features of the synthetic benchmark problem.
    features,
    /// Informative features of the synthetic benchmark problem.
    informative,
}

/// Layers defaults, the config file and flags into one configuration.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig> {
    let mut config = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        config.apply_file(path)?;
    }
    for (key, value) in flags.given() {
        config
            .set(key, value)
            .map_err(|m| CliError::Validation(format!("--{}: {m}", key.replace('_', "-"))))?;
    }
    Ok(config)
}

/// Runs a resolved configuration on a pool of `config.workers` threads and
/// writes its records. Records are written even when a numeric failure
/// stopped the command; the failure is returned afterwards.
pub fn run(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {} workers: {e}", config.workers)))?;
    let outcome = pool.install(|| execute(config))?;
    let io_error = |source| CliError::Io {
        path: config.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    };
    let mut out: Box<dyn Write> = match &config.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_error)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    output::write_records(&mut out, &outcome.records).map_err(io_error)?;
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
