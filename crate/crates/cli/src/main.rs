//! `weightlab`: weight constants, Bellman surfaces, extremal weights and
//! dyadic experiments from the command line.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.

mod commands;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use emit::Format;

#[derive(Parser, Debug)]
#[command(name = "weightlab", version, about = "Sharp constants for one-dimensional weights")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Grid points per unit interval for constant scans.
    #[arg(long, global = true, default_value_t = weightlab::constants::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Pass threshold for checks that report a raw worst case (bounds,
    /// tangent linearity, extremal attainment); each has its own default.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

impl RunConfig {
    fn validate(&self) -> anyhow::Result<()> {
        if self.resolution < 2 {
            bail!("--resolution must be at least 2, got {}", self.resolution);
        }
        if let Some(t) = self.tolerance {
            if t.is_nan() || t <= 0.0 {
                bail!("--tolerance must be positive, got {t}");
            }
        }
        Ok(())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Class constants of a weight read from JSON.
    Constants(commands::ConstantsArgs),
    /// Solve one of the transcendental equations.
    Solve(commands::SolveArgs),
    /// Evaluate or verify a Bellman surface.
    Bellman(commands::BellmanArgs),
    /// Build an extremal weight.
    Extremal(commands::ExtremalArgs),
    /// Dyadic splitting tree and Bellman chain of a weight.
    Dyadic(commands::DyadicArgs),
    /// Sharpness ratios over a range of Q.
    Sweep(commands::SweepArgs),
    /// Acceptance criteria and module invariants.
    Selftest(commands::SelftestArgs),
}

/// How a command finished when it did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WEIGHTLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("WEIGHTLAB_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("WEIGHTLAB_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    cli.run.validate()?;
    configure_threads()?;
    let cfg = &cli.run;
    match cli.command {
        Command::Constants(a) => commands::constants(cfg, a),
        Command::Solve(a) => commands::solve(cfg, a),
        Command::Bellman(a) => commands::bellman(cfg, a),
        Command::Extremal(a) => commands::extremal(cfg, a),
        Command::Dyadic(a) => commands::dyadic(cfg, a),
        Command::Sweep(a) => commands::sweep(cfg, a),
        Command::Selftest(a) => commands::selftest(cfg, a),
    }
}

/// Numerical failures that falsify a check rather than reject the input.
fn is_verification_failure(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<weightlab::Error>(),
        Some(weightlab::Error::Uncertified { .. } | weightlab::Error::SplitFailure { .. })
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_verification_failure(&e) { 1 } else { 2 })
        }
    }
}
