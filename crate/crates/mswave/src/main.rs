//! Command-line front end. Exit codes: 0 success / run completed,
//! 2 breaking detected, 3 resolution lost or step underflow, 1 error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mswave::commands;
use mswave::config::{parse_config, RunConfig};
use mswave::error::Result;

#[derive(Parser)]
#[command(
    name = "mswave",
    about = "Pseudo-spectral solver and wave-breaking analysis for a \
             moderate-amplitude shallow-water model on the periodic line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set epsilon=0.2 (repeatable; wins over the file)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the initial-value problem and write diagnostics CSV + JSON summary
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for output files (default: current directory)
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Evaluate the wave-breaking criterion on the configured initial data
    Criterion {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print kernel norms and the operator-inverse residual for a given mu
    Kernel {
        /// Dispersion parameter mu
        #[arg(long)]
        mu: f64,
        /// Grid size (even, >= 8)
        #[arg(long, default_value_t = 1024)]
        n: usize,
    },
    /// Sweep one parameter axis over a list of values
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Axis to vary: epsilon, mu, or ic.amplitude
        #[arg(long)]
        axis: String,
        /// Comma-separated list of axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Directory for per-run outputs and the index CSV
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// Worker threads (default: MSWAVE_WORKERS or the CPU count)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Built-in consistency self-test on fixed smooth profiles
    Check,
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)?;
    parse_config(&text, &args.set)
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
            std::env::var("MSWAVE_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
        .max(1)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { config, output_dir } => {
            let cfg = load_config(&config)?;
            commands::run_simulate(&cfg, &output_dir)
        }
        Command::Criterion { config } => {
            let cfg = load_config(&config)?;
            commands::run_criterion(&cfg, std::io::stdout().lock())
        }
        Command::Kernel { mu, n } => commands::run_kernel(mu, n, std::io::stdout().lock()),
        Command::Sweep { config, axis, values, output_dir, workers } => {
            let cfg = load_config(&config)?;
            commands::run_sweep(&cfg, &axis, &values, resolve_workers(workers), &output_dir)
        }
        Command::Check => commands::run_check(std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for BreakingDetected; route argument errors to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
