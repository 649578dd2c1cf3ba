//! Command-line driver: moment tables, factorizations, timing sweeps, rank
//! reports and coefficient transforms, all written as CSV.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use opmod_core::Error;

use config::{RawOptions, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad options or input files; exit code 2.
    Config(String),
    /// The numerics failed (not positive definite, rank too high, ...); exit code 3.
    Numerical(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidFamily(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::InsufficientMoments { .. }
            | Error::InsufficientInitialMoments { .. }
            | Error::BreakpointOutsideDomain(_)
            | Error::RangeOutOfCoverage { .. }
            | Error::Parse(_)
            | Error::Io(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "opmod", version, about = "Modified orthogonal polynomials from modified moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the moment table `n,mu`.
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of moments (default 2n - 1).
        #[arg(long)]
        m: Option<usize>,
        /// Add the relative error against the quadrature oracle.
        #[arg(long)]
        check_quadrature: bool,
    },
    /// Fill and factor the Gram section; print timing and residual.
    Factor {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the tridiagonal modified Jacobi section as `i,j,x`.
        #[arg(long)]
        jacobi: Option<PathBuf>,
    },
    /// Time factorizations over a sweep of sizes, as `n,algo,seconds`.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated sizes; defaults to --n.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated from dense, displacement, banded, hodlr.
        #[arg(long, default_value = "dense,displacement")]
        algos: String,
        /// Repetitions per size, keeping the fastest.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Off-diagonal ranks of the HODLR Gram section and its factor.
    Rankmap {
        #[command(flatten)]
        common: CommonArgs,
        /// Factor report path; defaults to the --out path with `.factor` before the extension.
        #[arg(long)]
        factor_out: Option<PathBuf>,
    },
    /// Convert coefficients between the known and modified families.
    Transform {
        #[command(flatten)]
        common: CommonArgs,
        /// One coefficient per line (or the last column of a CSV); standard
        /// normal coefficients from --seed when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// `modified` maps P coefficients to Q coefficients, `known` the reverse.
        #[arg(long, default_value = "modified")]
        to: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// chebyshev-t, chebyshev-u, legendre, jacobi:a,b or laguerre:a.
    #[arg(long)]
    pub family: Option<String>,
    /// Named weight preset, e.g. log-chebyshev, jacobi:0.5,-0.5, delta-sqrt:0.1.
    #[arg(long, allow_hyphen_values = true)]
    pub weight: Option<String>,
    /// Weight ODE description file.
    #[arg(long)]
    pub ode: Option<PathBuf>,
    /// Simple-function description file.
    #[arg(long)]
    pub simple: Option<PathBuf>,
    /// Singularity locations for the algebraic preset.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Exponents for the algebraic preset.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    /// dense, displacement, hodlr or auto.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// HODLR leaf size.
    #[arg(long, default_value_t = opmod_core::hodlr::DEFAULT_LEAF_SIZE)]
    pub leaf: usize,
}

impl CommonArgs {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        RunConfig::from_raw(RawOptions {
            family: self.family.clone(),
            weight: self.weight.clone(),
            ode: self.ode.clone(),
            simple: self.simple.clone(),
            t: self.t.clone(),
            gamma: self.gamma.clone(),
            n: self.n,
            tol: self.tol,
            backend: self.backend.clone(),
            seed: self.seed,
            out: self.out.clone(),
            leaf: self.leaf,
        })
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Moments { common, m, check_quadrature } => {
            let cfg = common.config()?;
            commands::cmd_moments(&cfg, m.unwrap_or(2 * cfg.n - 1), check_quadrature)
        }
        Command::Factor { common, jacobi } => commands::cmd_factor(&common.config()?, jacobi.as_deref()),
        Command::Bench { common, sizes, algos, repeat } => {
            let cfg = common.config()?;
            let sizes = match sizes {
                Some(s) => commands::parse_sizes(&s)?,
                None => vec![cfg.n],
            };
            commands::cmd_bench(&cfg, &sizes, &commands::parse_algos(&algos)?, repeat.max(1))
        }
        Command::Rankmap { common, factor_out } => commands::cmd_rankmap(&common.config()?, factor_out.as_deref()),
        Command::Transform { common, input, to } => {
            let to_modified = match to.as_str() {
                "modified" => true,
                "known" => false,
                _ => return Err(CliError::Config(format!("--to must be modified or known, got {to}"))),
            };
            commands::cmd_transform(&common.config()?, input.as_deref(), to_modified)
        }
    }
}
