//! `hosq`: surface integrals over closed implicit surfaces from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 mesh validation
//! failure, 3 I/O or file format error, 4 projection failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{MeshArgs, QuadArgs, SurfaceArgs};
use hosq::HosqError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "hosq", version, about = "High-order quadrature of surface integrals over implicit surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mesh of a built-in surface and write it as OFF
    GenMesh(GenMeshArgs),
    /// Integrate over a surface at one degree and print JSON
    Integrate(IntegrateArgs),
    /// Integrate over a range of degrees and write CSV
    Converge(ConvergeArgs),
    /// Check mesh conformity, and optionally Gauss-Bonnet on a surface
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags override its values
    #[arg(long, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Output path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenMeshArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Geometry and quadrature degree
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Degrees as a..b (step 2), a..b:step, or a comma-separated list
    #[arg(long, value_name = "a..b[:step]")]
    pub degrees: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Run a Gauss-Bonnet check at this degree (needs a surface)
    #[arg(long)]
    pub degree: Option<usize>,
}

/// Mesh failed the conformity checks.
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mesh validation failed: {}", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ValidationFailed>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<HosqError>() {
            return match e {
                HosqError::InvalidMesh(_) | HosqError::NonTriangleFace { .. } => 2,
                HosqError::Io(_) | HosqError::Format { .. } => 3,
                HosqError::Element { .. } => match e.root() {
                    HosqError::Convergence { .. } | HosqError::Domain(_) => 4,
                    _ => 1,
                },
                _ => 1,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::GenMesh(a) => commands::gen_mesh(a),
        Command::Integrate(a) => commands::integrate(a),
        Command::Converge(a) => commands::converge(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
