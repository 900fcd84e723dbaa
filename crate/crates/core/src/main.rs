use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rindler_embed::evolution::BoundaryKind;
use rindler_embed::runner::{self, LimitRegime, SimulationConfig};
use rindler_embed::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rindler",
    version,
    about = "Enlarged-space simulator for Rindler transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Galileo,
    Ultra,
}

#[derive(Subcommand)]
enum Command {
    /// Scan f, g and the denominator D over u = a·x and write a CSV.
    Coeffs {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        u_min: f64,
        #[arg(long, default_value_t = 20.0)]
        u_max: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Locate the point where the generator is singular.
    Singularity {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evolve a packet from a JSON config, writing snapshots and a report.
    Evolve {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides the output directory from the config.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare exact coefficients against the Galileo or ultra-relativistic limit.
    Limits {
        #[arg(value_enum)]
        regime: Regime,
        /// Comma-separated velocities (galileo) or deltas (ultra).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coeffs {
            a,
            u_min,
            u_max,
            samples,
            out,
        } => {
            let rows = runner::cmd_coeffs(a, u_min, u_max, samples, &out)?;
            let singular = rows.iter().filter(|r| r.regime == runner::Regime::Singular).count();
            eprintln!(
                "wrote {} rows ({singular} flagged singular) to {}",
                rows.len(),
                out.display()
            );
        }
        Command::Singularity { a, format } => {
            let report = runner::cmd_singularity(a)?;
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Evolve { config, out } => {
            let mut cfg = SimulationConfig::load(&config).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {}: {io}", config.display())),
                other => other,
            })?;
            if let Some(dir) = out {
                cfg.output = dir;
            }
            if cfg.scheme.boundary == BoundaryKind::Periodic {
                eprintln!("warning: f and g are not periodic; periodic boundaries are for convergence studies only");
            }
            let report = runner::cmd_evolve(&cfg)?;
            if let Some(last) = report.report.rows.last() {
                eprintln!(
                    "{} steps, dt = {:e}; t = {}: <x>_inertial = {:.6}, <x>_rindler = {:.6}",
                    report.steps, report.dt, last.t, last.x_inertial, last.x_rindler
                );
            }
        }
        Command::Limits { regime, values, out } => {
            let regime = match regime {
                Regime::Galileo => LimitRegime::Galileo,
                Regime::Ultra => LimitRegime::Ultra,
            };
            let csv = runner::cmd_limits(regime, &values, out.as_deref())?;
            if out.is_none() {
                print!("{csv}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
