//! Command-line driver for the verification suites.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on usage,
//! configuration or numerical errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use string_spectra::discretization::BoundaryCondition;
use string_spectra::error::Result;
use string_spectra::report::RunConfig;
use string_spectra::verify::{run_command, Command};

#[derive(Parser, Debug)]
#[command(name = "string-spectra", version, about = "Spectral checks for the damped string")]
struct Cli {
    /// JSON run configuration; unspecified fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for data files and report.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; repeat to give several.
    #[arg(long, global = true)]
    seed: Vec<u64>,
    /// Number of grid cells.
    #[arg(long = "n", global = true)]
    n_grid: Option<usize>,
    /// Boundary condition: max, min, zero0, zero1 or omega:<re>,<im>.
    #[arg(long, global = true)]
    bc: Option<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Kernel census, eigenvalues, residuals and symmetry checks.
    Spectrum,
    /// Green's functions and the continuum trace coefficient.
    Greens,
    /// Trace coefficients and eigenvalue-sum identities.
    Trace,
    /// Resolvent trace, Livsic relation and block resolvent formulas.
    ResolventCheck,
    /// Polar decomposition, partner vectors and diagonalization.
    SusyCheck,
    /// Branch asymptotics of the eigenvalues.
    Asymptotics,
    /// Riesz projections and the resolution of the identity.
    Riesz,
    /// Every suite plus the randomized trace checks.
    VerifyAll,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Greens => Command::Greens,
            Cmd::Trace => Command::Trace,
            Cmd::ResolventCheck => Command::ResolventCheck,
            Cmd::SusyCheck => Command::SusyCheck,
            Cmd::Asymptotics => Command::Asymptotics,
            Cmd::Riesz => Command::Riesz,
            Cmd::VerifyAll => Command::VerifyAll,
        }
    }
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if !cli.seed.is_empty() {
        cfg.seeds = cli.seed.clone();
    }
    if let Some(n) = cli.n_grid {
        cfg.n_grid = n;
    }
    if let Some(bc) = &cli.bc {
        cfg.bc = bc.parse::<BoundaryCondition>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = config(&cli).and_then(|cfg| run_command(cli.command.into(), &cfg));
    match report {
        Ok(rep) => {
            for r in &rep.records {
                println!("{}", r.line());
            }
            println!("{}: {} checks, {} failed", rep.command, rep.records.len(), rep.failures());
            if rep.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
