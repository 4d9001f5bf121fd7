//! Command-line front end: parse flags, load the JSON configuration,
//! dispatch to the solver pipeline and map failures to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tumor_stokes::cli::{self, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "tumor-stokes",
    about = "Stationary states, linearized spectra and surface-tension stability thresholds \
             for a Stokes free-boundary tumor-growth model",
    version
)]
struct Args {
    #[command(subcommand)]
    command: Cli,
}

#[derive(Subcommand)]
enum Cli {
    /// Solve the radially symmetric stationary state and export its profiles.
    Stationary(CommonArgs),
    /// Tabulate the degree-l nutrient modes and their moment integrals.
    Modes(CommonArgs),
    /// Export per-degree thresholds and multipliers at the given surface tensions.
    Spectrum(CommonArgs),
    /// Compute the stability threshold gamma_star and its maximizing degree.
    Threshold(CommonArgs),
    /// Reconstruct interior eigenmode fields and verify them residually.
    Eigenmode(CommonArgs),
    /// Simulate the linearized boundary dynamics from a random perturbation.
    Evolve(CommonArgs),
    /// Tabulate the Darcy comparison thresholds next to the Stokes family.
    CompareDarcy(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation degree (overrides the configuration).
    #[arg(long)]
    l_max: Option<u32>,
    /// Surface tension value, repeatable (overrides the configuration).
    #[arg(long = "gamma")]
    gamma: Vec<f64>,
    /// Seed for randomized initial states in `evolve`.
    #[arg(long)]
    seed: Option<u64>,
}

fn apply_overrides(config: &mut RunConfig, args: &CommonArgs) {
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(l_max) = args.l_max {
        config.l_max = l_max;
    }
    if !args.gamma.is_empty() {
        config.gamma_values = args.gamma.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, common) = match &args.command {
        Cli::Stationary(c) => (Command::Stationary, c),
        Cli::Modes(c) => (Command::Modes, c),
        Cli::Spectrum(c) => (Command::Spectrum, c),
        Cli::Threshold(c) => (Command::Threshold, c),
        Cli::Eigenmode(c) => (Command::Eigenmode, c),
        Cli::Evolve(c) => (Command::Evolve, c),
        Cli::CompareDarcy(c) => (Command::CompareDarcy, c),
    };

    let mut config = match RunConfig::from_file(&common.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code());
        }
    };
    apply_overrides(&mut config, common);
    if config.l_max < 2 {
        eprintln!("error: l_max must be at least 2");
        return ExitCode::from(2);
    }

    match cli::run(command, &config) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
