//! `sphex`: batch front end for the sphere-excursion library.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sphere_excursion::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        use sphere_excursion::Error as E;
        match self {
            CliError::Config(_) => "invalid_config",
            CliError::Io(_) | CliError::Csv(_) => "io",
            CliError::Core(e) => match e {
                E::Domain(_) => "domain",
                E::UnsupportedOrder { .. } => "unsupported_order",
                E::Degenerate(_) => "degenerate",
                E::Truncated { .. } => "truncated",
                E::UnderResolved(_) => "under_resolved",
                E::Invalid(_) => "invalid_input",
                E::Parse { .. } => "parse",
                E::Io(_) | E::Csv(_) => "io",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sphex",
    version,
    about = "Excursion-set experiments for needlet fields on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Tabulate ℓ, C_ℓ, b², κ² and the transformed spectrum.
    Spectra(Args),
    /// Expected LKCs and the excursion-probability approximation per level.
    LkcTheory(Args),
    /// Draw one realization and measure its excursion sets.
    Simulate(Args),
    /// Monte Carlo check of the expected LKCs.
    McValidate(Args),
    /// Monte Carlo check of the sup exceedance probability.
    McSup(Args),
    /// Normalized fourth cumulant at one point across scales.
    Cum4(Args),
}

#[derive(Debug, Clone, clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectra(_) => "spectra",
            Command::LkcTheory(_) => "lkc-theory",
            Command::Simulate(_) => "simulate",
            Command::McValidate(_) => "mc-validate",
            Command::McSup(_) => "mc-sup",
            Command::Cum4(_) => "cum4",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::Spectra(a)
            | Command::LkcTheory(a)
            | Command::Simulate(a)
            | Command::McValidate(a)
            | Command::McSup(a)
            | Command::Cum4(a) => a,
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cmd.args().config)?;
    if let Some(c) = &cfg.command {
        if c != cmd.name() {
            return Err(CliError::Config(format!(
                "config is for {c:?}, not {:?}",
                cmd.name()
            )));
        }
    }
    let out = commands::Output::create(&cfg, cmd.name())?;
    match cmd {
        Command::Spectra(_) => commands::spectra(&cfg, &out),
        Command::LkcTheory(_) => commands::lkc_theory(&cfg, &out),
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::McValidate(_) => commands::mc_validate(&cfg, &out),
        Command::McSup(_) => commands::mc_sup(&cfg, &out),
        Command::Cum4(_) => commands::cum4(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
