mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use commands::Outcome;
use config::RunConfig;
use error::CliError;
use output::Output;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "tswave", version, about = "Compressible Tollmien-Schlichting mode construction and checks")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random sources (overrides the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions on the shear profile.
    ValidateProfile,
    /// Tabulate the Airy primitives.
    Airy {
        /// A point "re,im"; repeatable.
        #[arg(long = "z")]
        z: Vec<String>,
        /// A ray "arg/pi,r_min,r_max,count" with geometric spacing.
        #[arg(long)]
        ray: Option<String>,
    },
    /// Slow (inviscid) mode on the grid.
    SlowMode,
    /// Viscous sublayer mode on the grid.
    FastMode,
    /// Regular and smallness error norms over the sweep.
    Errors,
    /// Winding numbers and roots of the dispersion function over the sweep.
    Dispersion,
    /// Resolvent iteration, contraction ratios and the direct-solve oracle.
    Resolvent,
    /// Assemble the exact mode at the dispersion root.
    Eigenmode,
    /// Quick internal consistency checks.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ValidateProfile => "validate-profile",
            Command::Airy { .. } => "airy",
            Command::SlowMode => "slow-mode",
            Command::FastMode => "fast-mode",
            Command::Errors => "errors",
            Command::Dispersion => "dispersion",
            Command::Resolvent => "resolvent",
            Command::Eigenmode => "eigenmode",
            Command::Selftest => "selftest",
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.out_dir {
        cfg.output.dir = d;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut out = Output::new(&cfg.output.dir, cli.command.name(), &cfg)?;
    let outcome = match &cli.command {
        Command::ValidateProfile => commands::validate_profile(&cfg, &mut out),
        Command::Airy { z, ray } => commands::airy(&cfg, &mut out, z, ray.as_deref()),
        Command::SlowMode => commands::slow_mode(&cfg, &mut out),
        Command::FastMode => commands::fast_mode(&cfg, &mut out),
        Command::Errors => commands::errors(&cfg, &mut out),
        Command::Dispersion => commands::dispersion(&cfg, &mut out),
        Command::Resolvent => commands::resolvent(&cfg, &mut out),
        Command::Eigenmode => commands::eigenmode(&cfg, &mut out),
        Command::Selftest => commands::selftest(&cfg, &mut out),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            out.warn(e.to_string());
            out.finish()?;
            return Err(e);
        }
    };
    out.finish()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Invalid(m)) => {
            eprintln!("tswave: validation failed: {m}");
            ExitCode::from(2)
        }
        Ok(Outcome::Flagged(m)) => {
            eprintln!("tswave: flagged: {m}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("tswave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
