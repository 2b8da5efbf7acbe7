use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sirwave::commands::{self, CliError, Command};
use sirwave::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sirwave",
    version,
    about = "Traveling waves of a lattice SIR model"
)]
struct Cli {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true, default_value = "sirwave.conf")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Equilibria, critical speed, decay rates and sensitivities.
    Analyze,
    /// Lattice simulation with front tracking.
    Simulate,
    /// Wave profile from the truncated fixed-point problem.
    Profile,
    /// Lyapunov functional along the profile.
    Lyapunov,
    /// Check the upper and lower solutions on a grid.
    VerifyBounds,
    /// Assumptions, bounds, residuals, boundary limits and monotonicity.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Analyze => Command::Analyze,
            Cmd::Simulate => Command::Simulate,
            Cmd::Profile => Command::Profile,
            Cmd::Lyapunov => Command::Lyapunov,
            Cmd::VerifyBounds => Command::VerifyBounds,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<commands::Outcome, CliError> {
        let cfg = RunConfig::load(&cli.config)?;
        let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        commands::execute(cli.command.into(), &cfg, &out)
    };
    match run() {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.report.render());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
