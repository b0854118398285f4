mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Architecture search for compact borehole-resistivity forward and inverse networks.
#[derive(Parser, Debug)]
#[command(name = "geonas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the tuning, full and validation datasets.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Records per dataset, overriding all three configured counts.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Search the architecture space of one phase.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        phase: String,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one architecture on the full dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        phase: String,
        /// Hyperparameters as JSON, e.g. '{"n":1,"k0":3,"k1":3,"l":3}'.
        /// Defaults to the tuned best.
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Invert a trajectory of measurements into a formation profile.
    Invert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Defaults to invert/profile.csv in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a trajectory file through a three-layer section.
    Trajectory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        positions: usize,
        #[arg(long, default_value_t = 5.0)]
        step_m: f64,
        #[arg(long, default_value_t = 88.0)]
        dip: f64,
        #[arg(long, default_value_t = 1.0)]
        start_tvd_m: f64,
        /// rho_c, rho_u, rho_l in ohm-m.
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 2.0, 200.0])]
        rho: Vec<f64>,
        /// Top and bottom boundary TVD in m.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 6.0])]
        boundaries: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geonas: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
