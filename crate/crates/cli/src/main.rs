mod commands;
mod output;
mod problem;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, GridSpec, Tols};
use problem::{ProblemFile, Tolerances};

/// Failure with its exit status: 2 for input or validation errors, 3 for
/// numerical or convergence failures.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<jcomplete::Error> for CliError {
    fn from(e: jcomplete::Error) -> Self {
        if e.is_validation() {
            Self::validation(e.to_string())
        } else {
            Self::numerical(e.to_string())
        }
    }
}

impl From<jcomplete::matnum::LinalgError> for CliError {
    fn from(e: jcomplete::matnum::LinalgError) -> Self {
        jcomplete::Error::from(e).into()
    }
}

#[derive(Parser)]
#[command(name = "jcomplete", version, about = "j-unitary completion and explicit scattering for Dirac-type systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Recover parameters, W and the unitary completion from a reflection coefficient.
    Complete { problem: PathBuf },
    /// Scattering coefficients of a parameter set, tabulated on the λ grid.
    Scatter { problem: PathBuf },
    /// Potential of a parameter set on the x grid, with its singular points.
    Potential { problem: PathBuf },
    /// Parameters and potential from a reflection coefficient.
    Invert { problem: PathBuf },
    /// Parameters → reflection → parameters, checking similarity and potentials.
    Roundtrip { problem: PathBuf },
    /// Compare closed forms with direct integration of the Dirac system.
    Verify { problem: PathBuf },
}

#[derive(Args)]
struct Options {
    #[arg(long = "grid-lmin", global = true, default_value_t = -10.0, allow_hyphen_values = true)]
    grid_lmin: f64,
    #[arg(long = "grid-lmax", global = true, default_value_t = 10.0, allow_hyphen_values = true)]
    grid_lmax: f64,
    #[arg(long = "grid-lpoints", global = true, default_value_t = 101)]
    grid_lpoints: usize,
    #[arg(long = "xmax", global = true, default_value_t = 10.0)]
    xmax: f64,
    #[arg(long = "xpoints", global = true, default_value_t = 101)]
    xpoints: usize,
    /// Residual tolerance (Riccati and admissibility) [default: 1e-9]
    #[arg(long = "tol-residual", global = true)]
    tol_residual: Option<f64>,
    /// Pointwise tolerance for grid checks [default: 1e-8]
    #[arg(long = "tol-grid", global = true)]
    tol_grid: Option<f64>,
    /// Tolerance for agreement with the integration oracle [default: 1e-4]
    #[arg(long = "tol-oracle", global = true)]
    tol_oracle: Option<f64>,
    #[arg(long = "out-dir", global = true, default_value = ".")]
    out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let o = &cli.options;
    let grid = GridSpec {
        lambda_min: o.grid_lmin,
        lambda_max: o.grid_lmax,
        lambda_points: o.grid_lpoints,
        x_max: o.xmax,
        x_points: o.xpoints,
    };
    grid.validate()?;
    let path = match &cli.command {
        Command::Complete { problem }
        | Command::Scatter { problem }
        | Command::Potential { problem }
        | Command::Invert { problem }
        | Command::Roundtrip { problem }
        | Command::Verify { problem } => problem,
    };
    let file = ProblemFile::read(path)?;
    let flags = Tolerances {
        residual: o.tol_residual,
        grid: o.tol_grid,
        oracle: o.tol_oracle,
    };
    let tols = Tols::resolve(&flags, file.tolerances.as_ref())?;
    let problem = file.validate()?;
    std::fs::create_dir_all(&o.out_dir)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", o.out_dir.display())))?;
    let ctx = Context {
        grid,
        tols,
        out_dir: &o.out_dir,
    };
    match cli.command {
        Command::Complete { .. } => commands::complete(&file, problem, &ctx),
        Command::Scatter { .. } => commands::scatter(problem, &ctx),
        Command::Potential { .. } => commands::potential(problem, &ctx),
        Command::Invert { .. } => commands::invert(problem, &ctx),
        Command::Roundtrip { .. } => commands::roundtrip(problem, &ctx),
        Command::Verify { .. } => commands::verify(problem, &ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jcomplete: {e}");
            ExitCode::from(e.code)
        }
    }
}
