use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_spectra::acceptance::AcceptanceOptions;
use stokes_spectra_cli::commands;
use stokes_spectra_cli::config::{Overrides, RunConfig, UsageError};

/// Benjamin–Feir spectra of deep-water Stokes waves.
#[derive(Parser)]
#[command(name = "stokes-spectra", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fourier truncation K (modes -K..K).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Amplitudes, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<String>,
    /// Bloch parameters: comma list or start:stop:count.
    #[arg(long, global = true)]
    mu: Option<String>,
    /// Gravity.
    #[arg(long, global = true)]
    g: Option<f64>,
    /// Seed for the randomized spot checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Harmonics of the Stokes wave and the linearized coefficients.
    Stokes,
    /// Full Bloch spectrum at every (μ, ε).
    Spectrum,
    /// Growth-rate sweep in μ with the locus plot.
    Bubble,
    /// Reduced 4×4 matrices, roots of the characteristic function and fits.
    Reduce,
    /// Runs the acceptance criteria; nonzero exit on any failure.
    Validate {
        /// Adds this multiple of cos x to p, to see the checks fail.
        #[arg(long, allow_hyphen_values = true)]
        corrupt_p: Option<f64>,
        /// Number of seeded random symmetry checks.
        #[arg(long, default_value_t = 3)]
        spot_checks: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let c = cli.common;
    let overrides = Overrides { out: c.out, k: c.k, eps: c.eps, mu: c.mu, g: c.g, seed: c.seed };
    let config = RunConfig::resolve(c.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Stokes => println!("{}", commands::stokes(&config)?.display()),
        Command::Spectrum => println!("{}", commands::spectrum_cmd(&config)?.display()),
        Command::Bubble => {
            let o = commands::bubble(&config)?;
            for p in [&o.csv, &o.timing, &o.summary].into_iter().chain(&o.svgs) {
                println!("{}", p.display());
            }
        }
        Command::Reduce => println!("{}", commands::reduce(&config)?.display()),
        Command::Validate { corrupt_p, spot_checks } => {
            let (summary, path) = commands::validate(&config, &AcceptanceOptions { corrupt_p }, spot_checks)?;
            println!("{}/{} criteria pass", summary.passed, summary.total);
            println!("{}", path.display());
            return Ok(summary.pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
