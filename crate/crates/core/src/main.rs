use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dirac_gauss::cli::{exit_code, run, thread_count, Command, EXIT_CONFIG};
use dirac_gauss::config::RunConfig;

#[derive(Parser)]
#[command(name = "dirac-gauss", version, about = "Relativistic atomic structure in a kinetically balanced Gaussian basis")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-electron Dirac levels per κ, with exact point-nucleus references.
    SolveOne(Common),
    /// Dirac-Hartree-Fock for the configured nucleus.
    Scf(Common),
    /// Point and Gaussian nucleus runs compared level by level.
    CompareNucleus(Common),
    /// Radial functions of converged levels on a plotting grid.
    ExportWf(Common),
    /// Writes the configured even-tempered basis as a basis file.
    GenBasis(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for tables and grids.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cmd, common) = match args.command {
        Cmd::SolveOne(c) => (Command::SolveOne, c),
        Cmd::Scf(c) => (Command::Scf, c),
        Cmd::CompareNucleus(c) => (Command::CompareNucleus, c),
        Cmd::ExportWf(c) => (Command::ExportWf, c),
        Cmd::GenBasis(c) => (Command::GenBasis, c),
    };
    let cfg = match RunConfig::from_file(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match thread_count(&cfg) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: thread pool already initialised: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    match run(cmd, &cfg, common.out.as_deref()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if !outcome.converged {
                eprintln!("warning: SCF did not converge; tables are from the last iteration");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
