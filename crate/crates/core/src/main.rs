use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirac_torus::harness::{parse_config, run, Command};

/// Periodic solutions of a nonlinear Dirac equation on the 3-torus.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration in `section.key = value` form.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Clifford algebra, eigenbases, hypotheses and gradients.
    Verify(Common),
    /// Write the per-mode spectrum as CSV.
    Spectrum(Common),
    /// Min-max flow and Newton refinement at `params.eps`.
    Solve(Common),
    /// Full continuation down to eps = 0.
    Continue(Common),
    /// Convert a field snapshot to a grid CSV.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshot: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Continue(c) => (Command::Continue, c),
        Cmd::Export { common, snapshot } => (Command::Export { snapshot }, common),
    };
    let config = std::fs::read_to_string(&common.config)
        .map_err(|e| dirac_torus::Error::Config(format!("{}: {e}", common.config.display())))
        .and_then(|text| parse_config(&text));
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let summary = run(&command, &config, common.out.as_deref());
    for line in &summary.lines {
        println!("{line}");
    }
    if let Some(e) = &summary.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(summary.exit_code() as u8)
}
